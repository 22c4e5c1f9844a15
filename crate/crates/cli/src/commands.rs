//! The experiment commands. Each one turns a resolved config into staged
//! output files plus a JSON object of command-specific metadata.

use nalgebra::Vector3;
use serde_json::{json, Value};

use spinwave::dephasing::{g2_asymptotic, g2_of_t, overlap_symmetric, overlap_symmetric_mc, phase_matrix};
use spinwave::dicke::TimedDicke;
use spinwave::dynamics::{
    cascade_ode_check, cascade_two_photon, e0_of_t, emission_spectrum, fit_lorentzian, linspace,
    single_exc_ode_oracle, validity_check, ModeGrid,
};
use spinwave::ensemble::{AtomicEnsemble, WaveVector};
use spinwave::radiative::{gamma_n, near_field_pairs, ComplexRate, KernelMode};
use spinwave::scan::{coupling_profile, cut_1d, profile_fwhm, shell_patch};
use spinwave::Complex64;

use crate::config::{ElementKind, ModeSpec, RunConfig, ScanSpec};
use crate::output::{numbered, Csv, Staging};
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Ensemble,
    CouplingMap,
    Gamma,
    Dynamics,
    Spectrum,
    Cascade,
    G2,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ensemble => "ensemble",
            Command::CouplingMap => "coupling_map",
            Command::Gamma => "gamma",
            Command::Dynamics => "dynamics",
            Command::Spectrum => "spectrum",
            Command::Cascade => "cascade",
            Command::G2 => "g2",
        }
    }
}

/// Everything a command needs besides the config.
pub struct Context<'a> {
    pub staging: &'a mut Staging,
    pub index: Option<usize>,
}

impl Context<'_> {
    fn file(&self, name: &str) -> String {
        numbered(name, self.index)
    }

    fn csv(&mut self, name: &str, csv: Csv) -> Result<String, Failure> {
        let file = self.file(name);
        self.staging.write(&file, &csv.into_bytes())?;
        Ok(file)
    }
}

pub fn run(cmd: Command, cfg: &RunConfig, ctx: &mut Context<'_>) -> Result<Value, Failure> {
    let e = cfg.build_ensemble()?;
    let base = json!({
        "N": e.len(),
        "ensemble_hash": e.content_hash(),
        "geometry": e.geometry().map(|g| g.to_string()).unwrap_or_else(|| "explicit".into()),
        "density_per_cm3": e.density_per_cm3(),
    });
    let extra = match cmd {
        Command::Ensemble => ensemble(&e, ctx)?,
        Command::CouplingMap => coupling_map(cfg, &e, ctx)?,
        Command::Gamma => gamma(cfg, &e)?,
        Command::Dynamics => dynamics(cfg, &e, ctx)?,
        Command::Spectrum => spectrum(cfg, &e, ctx)?,
        Command::Cascade => cascade(cfg, &e, ctx)?,
        Command::G2 => g2(cfg, &e, ctx)?,
    };
    let mut out = base;
    if let (Some(o), Value::Object(x)) = (out.as_object_mut(), extra) {
        o.extend(x);
    }
    Ok(out)
}

fn ensemble(e: &AtomicEnsemble, ctx: &mut Context<'_>) -> Result<Value, Failure> {
    let mut buf = Vec::new();
    e.write_to(&mut buf)?;
    let file = ctx.file("ensemble.txt");
    ctx.staging.write(&file, &buf)?;
    Ok(json!({ "outputs": [file] }))
}

fn k_row(k: &WaveVector, v: Complex64) -> [f64; 6] {
    [k.0.x, k.0.y, k.0.z, v.re, v.im, v.norm()]
}

const K_HEADER: [&str; 6] = ["kx", "ky", "kz", "re", "im", "|v|"];

fn coupling_map(cfg: &RunConfig, e: &AtomicEnsemble, ctx: &mut Context<'_>) -> Result<Value, Failure> {
    let scan = cfg.scan.as_ref().ok_or_else(|| Failure::Config("`scan` is required for coupling-map".into()))?;
    let k0p = cfg.k0p()?;
    let sys = TimedDicke::new(e, k0p);
    let (points, cut) = match *scan {
        ScanSpec::Cut { t_min_keg, t_max_keg, points } => {
            if points < 2 || !(t_max_keg > t_min_keg) {
                return Err(Failure::Config("cut needs t_max_keg > t_min_keg and at least two points".into()));
            }
            let t = linspace(t_min_keg, t_max_keg, points);
            (cut_1d(&k0p, &t)?, Some(t))
        }
        ScanSpec::Patch { half_width_keg, points } => (shell_patch(&k0p, half_width_keg, points)?.points, None),
    };
    let samples = coupling_profile(&sys, &points)?;
    let panels: [(&str, Box<dyn Fn(usize) -> Complex64>); 4] = [
        ("symmetric", Box::new(|i| samples[i].symmetric)),
        ("nonsymmetric_total", Box::new(|i| Complex64::new(samples[i].nonsymmetric_total, 0.0))),
        ("s_aggregate", Box::new(|i| samples[i].s_aggregate)),
        ("v0g", Box::new(|i| samples[i].v0g)),
    ];
    let mut outputs = Vec::new();
    let mut summary = serde_json::Map::new();
    for (name, value) in &panels {
        let mut csv = Csv::new(&K_HEADER);
        let mut abs = Vec::with_capacity(points.len());
        for (i, k) in points.iter().enumerate() {
            let v = value(i);
            abs.push(v.norm());
            csv.row(&k_row(k, v));
        }
        outputs.push(ctx.csv(&format!("coupling_{name}.csv"), csv)?);
        let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = abs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let fwhm = cut.as_ref().and_then(|t| profile_fwhm(t, &abs));
        summary.insert(name.to_string(), json!({ "min_abs": min, "max_abs": max, "fwhm_keg": fwhm }));
    }
    let mut element_meta = Value::Null;
    if let Some(el) = cfg.element {
        let mut csv = Csv::new(&K_HEADER);
        for k in &points {
            let v = match el.kind {
                ElementKind::Same => sys.v_nn(el.n, el.ell, el.ell_prime, k)?,
                ElementKind::Down => sys.v_down(el.n, el.ell, el.ell_prime, k)?,
                ElementKind::Ground => sys.v_ground(el.ell, k)?,
            };
            csv.row(&k_row(k, v.0));
        }
        outputs.push(ctx.csv("coupling_element.csv", csv)?);
        element_meta = json!({
            "kind": format!("{:?}", el.kind).to_lowercase(),
            "n": el.n,
            "ell": el.ell,
            "ell_prime": el.ell_prime,
        });
    }
    Ok(json!({
        "k0p": [k0p.0.x, k0p.0.y, k0p.0.z],
        "scan_points": points.len(),
        "panels": summary,
        "element": element_meta,
        "normalization": "symmetric and nonsymmetric_total divided by N, v0g by sqrt(N), s_aggregate uses ell = N - 1",
        "outputs": outputs,
    }))
}

fn collective_rate(cfg: &RunConfig, e: &AtomicEnsemble) -> Result<(ComplexRate, KernelMode), Failure> {
    let mode: KernelMode = cfg.kernel.into();
    let near = near_field_pairs(e);
    if near > 0 {
        log::warn!("{near} atom pairs lie inside the near-field cutoff");
    }
    Ok((gamma_n(e, &cfg.k0p()?, &cfg.axis()?, mode), mode))
}

fn gamma(cfg: &RunConfig, e: &AtomicEnsemble) -> Result<Value, Failure> {
    let (g, mode) = collective_rate(cfg, e)?;
    Ok(json!({
        "seed": e.seed(),
        "re_gamma_over_Gamma": g.re(),
        "im_gamma_over_Gamma": g.im(),
        "mode": mode.name(),
        "near_field_pairs": near_field_pairs(e),
    }))
}

fn time_grid(cfg: &RunConfig, default_end: f64) -> Result<Vec<f64>, Failure> {
    let (start, end, points) = match cfg.times {
        Some(t) => (t.start_inv_gamma, t.end_inv_gamma, t.points),
        None => (0.0, default_end, 201),
    };
    if points < 1 || !(end >= start) || !(start >= 0.0) || !end.is_finite() {
        return Err(Failure::Config("times need 0 <= start <= end and at least one point".into()));
    }
    Ok(if points == 1 { vec![start] } else { linspace(start, end, points) })
}

fn dynamics(cfg: &RunConfig, e: &AtomicEnsemble, ctx: &mut Context<'_>) -> Result<Value, Failure> {
    let pulse = cfg.pulse()?;
    let (g, mode) = collective_rate(cfg, e)?;
    let validity = validity_check(&pulse, g);
    if !validity.ok && !cfg.allow_invalid_pulse {
        return Err(Failure::Config(format!(
            "Re(Γ_N) T / 2 = {:.3} is not below the validity threshold; set allow_invalid_pulse to override",
            validity.ratio
        )));
    }
    let times = time_grid(cfg, pulse.duration() + 5.0 / g.re().max(1e-12))?;
    let trace = e0_of_t(&pulse, g, &times);
    let mut csv = Csv::new(&["t", "re", "im"]);
    for (t, v) in trace.times.iter().zip(&trace.values) {
        csv.row(&[*t, v.re, v.im]);
    }
    let mut outputs = vec![ctx.csv("dynamics_e0.csv", csv)?];
    let mut max_deviation = Value::Null;
    if cfg.ode_oracle {
        let r = single_exc_ode_oracle(e, &cfg.k0p()?, &cfg.axis()?, mode, Some(&pulse), &times)?;
        let mut csv = Csv::new(&["t", "re", "im", "leakage"]);
        let mut worst: f64 = 0.0;
        for i in 0..times.len() {
            // the closed form carries the factor i of the laser-frame projection
            let v = Complex64::i() * r.projection.values[i];
            worst = worst.max((v - trace.values[i]).norm());
            csv.row(&[times[i], v.re, v.im, r.leakage[i]]);
        }
        outputs.push(ctx.csv("dynamics_oracle.csv", csv)?);
        max_deviation = json!(worst);
    }
    Ok(json!({
        "re_gamma_over_Gamma": g.re(),
        "im_gamma_over_Gamma": g.im(),
        "mode": mode.name(),
        "pulse_duration_inv_gamma": pulse.duration(),
        "validity_ratio": validity.ratio,
        "validity_ok": validity.ok,
        "oracle_max_deviation": max_deviation,
        "outputs": outputs,
    }))
}

fn mode_grid(cfg: &RunConfig, g: ComplexRate, default_half_width: f64) -> Result<ModeGrid, Failure> {
    let default = ModeSpec {
        sphere: None,
        directions: None,
        detuning_half_width_gamma: None,
        detuning_points: spinwave::dynamics::emission::DEFAULT_DETUNING_POINTS,
    };
    let spec = cfg.modes.as_ref().unwrap_or(&default);
    let half = spec.detuning_half_width_gamma.unwrap_or(default_half_width * g.re().abs());
    let det = ModeGrid::uniform_detunings(half, spec.detuning_points)?;
    let axis = cfg.axis()?;
    let grid = match (&spec.sphere, &spec.directions) {
        (Some(_), Some(_)) => return Err(Failure::Config("give either modes.sphere or modes.directions".into())),
        (Some(s), None) => ModeGrid::sphere(s.n_theta, s.n_phi, det, axis)?,
        (None, Some(dirs)) => {
            let d: Vec<Vector3<f64>> = dirs.iter().map(|v| Vector3::from(*v)).collect();
            let w = vec![1.0; d.len()];
            ModeGrid::new(d, w, det.0, det.1, axis)?
        }
        (None, None) => ModeGrid::single_direction(cfg.k0p()?.0.normalize(), det, axis)?,
    };
    Ok(grid)
}

fn spectrum(cfg: &RunConfig, e: &AtomicEnsemble, ctx: &mut Context<'_>) -> Result<Value, Failure> {
    let (g, mode) = collective_rate(cfg, e)?;
    let grid = mode_grid(cfg, g, spinwave::dynamics::emission::DEFAULT_DETUNING_SPAN)?;
    let spec = cfg.spectrum.unwrap_or(crate::config::SpectrumSpec { time_inv_gamma: None, normalize: true });
    let t = spec.time_inv_gamma.unwrap_or(f64::INFINITY);
    let sys = TimedDicke::new(e, cfg.k0p()?);
    let rows = emission_spectrum(&sys, g, &grid, t, spec.normalize)?;
    let mut csv = Csv::new(&["delta_omega", "direction_x", "direction_y", "direction_z", "intensity"]);
    for r in &rows {
        csv.row(&[r.detuning, r.direction.x, r.direction.y, r.direction.z, r.intensity]);
    }
    let mut outputs = vec![ctx.csv("spectrum.csv", csv)?];
    let n_det = grid.detunings().len();
    let mut fits = Csv::new(&["direction_x", "direction_y", "direction_z", "center", "fwhm", "re_gamma"]);
    let mut phase_matched_fwhm = None;
    let pole = cfg.k0p()?.0.normalize();
    let nearest = (0..grid.directions().len())
        .max_by(|&a, &b| grid.directions()[a].dot(&pole).total_cmp(&grid.directions()[b].dot(&pole)));
    for (d, dir) in grid.directions().iter().enumerate() {
        let y: Vec<f64> = rows[d * n_det..(d + 1) * n_det].iter().map(|r| r.intensity).collect();
        let (center, fwhm) = match fit_lorentzian(grid.detunings(), &y) {
            Ok(f) => (f.center, f.fwhm),
            Err(_) => (f64::NAN, f64::NAN),
        };
        if Some(d) == nearest {
            phase_matched_fwhm = Some(fwhm).filter(|f| f.is_finite());
        }
        fits.row(&[dir.x, dir.y, dir.z, center, fwhm, g.re()]);
    }
    outputs.push(ctx.csv("spectrum_fit.csv", fits)?);
    Ok(json!({
        "re_gamma_over_Gamma": g.re(),
        "im_gamma_over_Gamma": g.im(),
        "mode": mode.name(),
        "time_inv_gamma": spec.time_inv_gamma,
        "normalized": spec.normalize,
        "phase_matched_fwhm": phase_matched_fwhm,
        "outputs": outputs,
    }))
}

fn cascade(cfg: &RunConfig, e: &AtomicEnsemble, ctx: &mut Context<'_>) -> Result<Value, Failure> {
    let (g, mode) = collective_rate(cfg, e)?;
    let grid = mode_grid(cfg, g, 2.0)?;
    let times = time_grid(cfg, 10.0 / g.re().max(1e-12))?;
    let sys = TimedDicke::new(e, cfg.k0p()?);
    let r = cascade_two_photon(&sys, g, &grid, &times)?;
    let n_det = grid.detunings().len();

    let mut csv = Csv::new(&["t", "re", "im"]);
    for (t, v) in r.e02.times.iter().zip(&r.e02.values) {
        csv.row(&[*t, v.re, v.im]);
    }
    let mut outputs = vec![ctx.csv("cascade_e02.csv", csv)?];

    let mut modes = Csv::new(&["mode", "delta_omega", "direction_x", "direction_y", "direction_z"]);
    let mut ephi = Csv::new(&["mode", "t", "re", "im"]);
    for (m, trace) in r.ephi0.iter().enumerate() {
        let d = grid.directions()[m / n_det];
        modes.row(&[m as f64, grid.detunings()[m % n_det], d.x, d.y, d.z]);
        for (t, v) in trace.times.iter().zip(&trace.values) {
            ephi.row(&[m as f64, *t, v.re, v.im]);
        }
    }
    outputs.push(ctx.csv("cascade_modes.csv", modes)?);
    outputs.push(ctx.csv("cascade_ephi0.csv", ephi)?);

    let mut table = Csv::new(&["mode_a", "mode_b", "re", "im", "abs2"]);
    for a in 0..r.g_table.nrows() {
        for b in 0..r.g_table.ncols() {
            let v = r.g_table[(a, b)];
            table.row(&[a as f64, b as f64, v.re, v.im, v.norm_sqr()]);
        }
    }
    outputs.push(ctx.csv("cascade_g.csv", table)?);

    let check = if cfg.cascade_ode_check {
        let c = cascade_ode_check(&sys, g, grid.detunings())?;
        json!({ "max_abs_error": c.max_abs_error, "relative_error": c.relative_error() })
    } else {
        Value::Null
    };
    Ok(json!({
        "re_gamma_over_Gamma": g.re(),
        "im_gamma_over_Gamma": g.im(),
        "mode": mode.name(),
        "modes": grid.mode_count(),
        "ode_check": check,
        "outputs": outputs,
    }))
}

fn g2(cfg: &RunConfig, e: &AtomicEnsemble, ctx: &mut Context<'_>) -> Result<Value, Failure> {
    let spec = cfg.g2.as_ref().ok_or_else(|| Failure::Config("`g2` is required for the g2 command".into()))?;
    let c = spec.amplitudes.resolve()?;
    let model = spec.interaction.into();
    if spec.storage_times_inv_gamma.is_empty() {
        return Err(Failure::Config("g2.storage_times_inv_gamma is empty".into()));
    }
    let mut csv = Csv::new(&["T", "g2", "g2_asymptotic", "overlap_sym_re", "overlap_sym_im"]);
    let mut std_errors = Vec::new();
    for &t in &spec.storage_times_inv_gamma {
        let phi = phase_matrix(e, model, t, cfg.seed)?;
        let ov = if spec.overlap_n <= 3 {
            overlap_symmetric(&phi, spec.overlap_n)?
        } else {
            overlap_symmetric_mc(&phi, spec.overlap_n, spec.overlap_samples, cfg.seed)?
        };
        std_errors.push(ov.std_error);
        csv.row(&[t, g2_of_t(&c, &phi)?, g2_asymptotic(&c, &phi)?, ov.value.re, ov.value.im]);
    }
    let outputs = vec![ctx.csv("g2.csv", csv)?];
    Ok(json!({
        "model": format!("{model:?}"),
        "amplitudes": { "c0": [c.c0.re, c.c0.im], "c1": [c.c1.re, c.c1.im], "c2": [c.c2.re, c.c2.im] },
        "g2_zero": spinwave::dephasing::g2_zero(&c)?,
        "phase_seed": cfg.seed,
        "overlap_n": spec.overlap_n,
        "overlap_std_error": std_errors,
        "outputs": outputs,
    }))
}
