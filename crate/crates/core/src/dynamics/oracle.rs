//! Per-atom integration of the single-excitation amplitudes.
//!
//! Without a pulse the excited amplitudes start in the symmetric timed-Dicke
//! state and obey `dE/dt = -M E`. With a pulse they start at zero and are
//! driven from the stored amplitudes `R` in the laser-dressed frame:
//! `dE/dt = -i(Ω/2) R - M E`, `dR/dt = -i(Ω/2) E`. In that frame the stored
//! spin wave already carries the phases `exp(i k'_0·r)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ode::{solve, State, Tolerances};
use super::{AmplitudeTrace, PulseProfile};
use crate::ensemble::{AtomicEnsemble, WaveVector};
use crate::radiative::{decay_matrix, DipoleAxis, KernelMode};
use crate::{Error, Result};

pub const MAX_ORACLE_ATOMS: usize = 2000;

#[derive(Debug, Clone)]
pub struct OdeOracleResult {
    /// Excited amplitudes `E_μ` at each output time.
    pub amplitudes: Vec<State>,
    /// `⟨sym|E(t)⟩`.
    pub projection: AmplitudeTrace,
    /// `d⟨sym|E⟩/dt`, evaluated from the equations of motion.
    pub projection_slope: Vec<Complex64>,
    /// `1 - |⟨sym|E⟩|² / ‖E‖²` (0 where `E` vanishes).
    pub leakage: Vec<f64>,
}

pub fn single_exc_ode_oracle(
    e: &AtomicEnsemble,
    k0p: &WaveVector,
    axis: &DipoleAxis,
    mode: KernelMode,
    pulse: Option<&PulseProfile>,
    times: &[f64],
) -> Result<OdeOracleResult> {
    let n = e.len();
    if n > MAX_ORACLE_ATOMS {
        return Err(Error::TooLarge(format!("ODE oracle limited to N <= {MAX_ORACLE_ATOMS}, got {n}")));
    }
    let m = decay_matrix(e, axis, mode);
    let scale = 1.0 / (n as f64).sqrt();
    let sym = State::from_iterator(n, e.positions().iter().map(|r| Complex64::cis(k0p.0.dot(r)) * scale));

    let (states, slopes) = match pulse {
        None => {
            let rhs = |_: f64, y: &State| -(&m * y);
            let states = solve(rhs, 0.0, sym.clone(), times, &[], Tolerances::default())?;
            let slopes = states.iter().map(|s| sym.dotc(&-(&m * s))).collect::<Vec<_>>();
            (states, slopes)
        }
        Some(p) => {
            let rhs = driven_rhs(&m, p);
            let mut y0 = State::zeros(2 * n);
            y0.rows_mut(n, n).copy_from(&sym);
            let full = solve(&rhs, 0.0, y0, times, &[p.duration()], Tolerances::default())?;
            let slopes = times
                .iter()
                .zip(&full)
                .map(|(&t, y)| sym.dotc(&rhs(t, y).rows(0, n).into_owned()))
                .collect::<Vec<_>>();
            (full.into_iter().map(|y| y.rows(0, n).into_owned()).collect(), slopes)
        }
    };

    let projection: Vec<Complex64> = states.iter().map(|s| sym.dotc(s)).collect();
    let leakage = states
        .iter()
        .zip(&projection)
        .map(|(s, p)| {
            let norm = s.norm_squared();
            if norm == 0.0 {
                0.0
            } else {
                (1.0 - p.norm_sqr() / norm).max(0.0)
            }
        })
        .collect();
    Ok(OdeOracleResult {
        amplitudes: states,
        projection: AmplitudeTrace { times: times.to_vec(), values: projection },
        projection_slope: slopes,
        leakage,
    })
}

fn driven_rhs<'a>(m: &'a DMatrix<Complex64>, pulse: &'a PulseProfile) -> impl Fn(f64, &State) -> State + 'a {
    move |t, y| {
        let n = m.nrows();
        let drive = Complex64::new(0.0, -0.5 * pulse.rabi(t));
        let excited = y.rows(0, n);
        let stored = y.rows(n, n);
        let mut dy = State::zeros(2 * n);
        let decay = -(m * excited);
        dy.rows_mut(0, n).copy_from(&(decay + stored * drive));
        dy.rows_mut(n, n).copy_from(&(excited * drive));
        dy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{e0_of_t, linspace, validity_check, PulseShape};
    use crate::ensemble::{AtomCount, Geometry, PhysicalUnits};
    use crate::radiative::{f_pair, gamma_n};
    use nalgebra::Vector3;

    #[test]
    fn single_atom_decays_at_half_rate() {
        let e = AtomicEnsemble::from_positions(vec![Vector3::zeros()]).unwrap();
        let times = linspace(0.0, 5.0, 11);
        let r = single_exc_ode_oracle(&e, &WaveVector::along_z(), &DipoleAxis::x(), KernelMode::RealOnly, None, &times)
            .unwrap();
        for (t, v) in times.iter().zip(&r.projection.values) {
            assert!((v - Complex64::new((-0.5 * t).exp(), 0.0)).norm() < 1e-9);
        }
        assert!(r.leakage.iter().all(|&l| l < 1e-12));
    }

    #[test]
    fn close_pair_eigen_rates() {
        let x = Vector3::new(0.0, 0.7, 0.0);
        let e = AtomicEnsemble::from_positions(vec![Vector3::zeros(), x]).unwrap();
        let axis = DipoleAxis::x();
        let m = decay_matrix(&e, &axis, KernelMode::RealOnly).map(|c| c.re);
        let eig = m.symmetric_eigen();
        let f = f_pair(&x, &axis);
        let mut rates: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        rates.sort_by(f64::total_cmp);
        assert!((rates[0] - (1.0 - f) / 2.0).abs() < 1e-12);
        assert!((rates[1] - (1.0 + f) / 2.0).abs() < 1e-12);
        // k'_0 ⊥ separation: symmetric state is the (1+f) eigenvector
        let times = linspace(0.0, 4.0, 9);
        let r = single_exc_ode_oracle(&e, &WaveVector::along_z(), &axis, KernelMode::RealOnly, None, &times).unwrap();
        for (t, amps) in times.iter().zip(&r.amplitudes) {
            let a = ((-rates[0] * t).exp() + (-rates[1] * t).exp()) / 2.0;
            let b = ((-rates[1] * t).exp() - (-rates[0] * t).exp()) / 2.0;
            // E(0) = (1, 1)/√2 is pure (1+f); check via the superposition of basis starts
            let expected = (a + b) / 2f64.sqrt();
            assert!((amps[0].re - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn initial_slope_matches_collective_rate() {
        let e = AtomicEnsemble::generate(Geometry::Sphere { radius_um: 1.0 }, AtomCount::Count(40), 2, PhysicalUnits::default())
            .unwrap();
        let k0p = WaveVector::along_z();
        for mode in [KernelMode::RealOnly, KernelMode::Complex] {
            let g = gamma_n(&e, &k0p, &DipoleAxis::x(), mode);
            let r = single_exc_ode_oracle(&e, &k0p, &DipoleAxis::x(), mode, None, &[0.0, 1e-4]).unwrap();
            let slope = r.projection_slope[0];
            assert!((slope + g.0 / 2.0).norm() <= 1e-10 * g.0.norm());
            let fd = (r.projection.values[1] - r.projection.values[0]) / 1e-4;
            assert!((fd + g.0 / 2.0).norm() <= 1e-3 * g.0.norm());
        }
    }

    #[test]
    fn driven_projection_tracks_closed_form() {
        let e = AtomicEnsemble::generate(Geometry::Sphere { radius_um: 2.0 }, AtomCount::Count(30), 9, PhysicalUnits::default())
            .unwrap();
        let k0p = WaveVector::along_z();
        let axis = DipoleAxis::x();
        let g = gamma_n(&e, &k0p, &axis, KernelMode::RealOnly);
        for shape in [PulseShape::Square, PulseShape::SinSquared] {
            let p = PulseProfile::new(shape, 200.0).unwrap();
            let v = validity_check(&p, g);
            assert!(v.ok);
            let times = linspace(0.0, 3.0 / g.re(), 13);
            let r = single_exc_ode_oracle(&e, &k0p, &axis, KernelMode::RealOnly, Some(&p), &times).unwrap();
            let closed = e0_of_t(&p, g, &times);
            for i in 0..times.len() {
                let diff = (closed.values[i] - Complex64::i() * r.projection.values[i]).norm();
                assert!(diff <= 2.0 * (v.ratio + r.leakage[i]) + 1e-9, "t = {}: {diff}", times[i]);
                assert!(r.amplitudes[i].norm() <= 1.0 + 1e-9);
            }
        }
    }
}
