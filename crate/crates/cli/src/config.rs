//! Run configuration. Every physical quantity carries its unit in the key
//! name; unknown keys are rejected.

use std::path::PathBuf;

use nalgebra::Vector3;
use serde::Deserialize;
use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

use spinwave::dephasing::{InteractionModel, StateAmplitudes};
use spinwave::dynamics::{PulseProfile, PulseShape};
use spinwave::ensemble::{AtomCount, AtomicEnsemble, Geometry, PhysicalUnits, WaveVector};
use spinwave::radiative::{DipoleAxis, KernelMode};
use spinwave::Complex64;

use crate::Failure;

fn default_wavelength() -> f64 {
    780.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub k0p: K0Spec,
    #[serde(default = "default_axis")]
    pub dipole_axis: [f64; 3],
    #[serde(default)]
    pub kernel: KernelChoice,
    pub scan: Option<ScanSpec>,
    pub element: Option<ElementSpec>,
    pub pulse: Option<PulseSpec>,
    pub times: Option<TimeGrid>,
    #[serde(default)]
    pub ode_oracle: bool,
    #[serde(default)]
    pub allow_invalid_pulse: bool,
    pub modes: Option<ModeSpec>,
    pub spectrum: Option<SpectrumSpec>,
    #[serde(default)]
    pub cascade_ode_check: bool,
    pub g2: Option<G2Spec>,
}

fn default_axis() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub geometry: Option<GeometrySpec>,
    pub atoms: Option<usize>,
    pub density_per_cm3: Option<f64>,
    /// Load positions from an ensemble file instead of sampling.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    Cube { side_um: f64 },
    Sphere { radius_um: f64 },
    Gaussian { sigma_um: f64 },
}

impl From<GeometrySpec> for Geometry {
    fn from(g: GeometrySpec) -> Self {
        match g {
            GeometrySpec::Cube { side_um } => Geometry::Cube { side_um },
            GeometrySpec::Sphere { radius_um } => Geometry::Sphere { radius_um },
            GeometrySpec::Gaussian { sigma_um } => Geometry::Gaussian { sigma_um },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct K0Spec {
    #[serde(default = "default_k0_direction")]
    pub direction: [f64; 3],
    /// `|k'_0|` in units of `k_eg`.
    #[serde(default = "one")]
    pub magnitude_keg: f64,
}

fn default_k0_direction() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn one() -> f64 {
    1.0
}

impl Default for K0Spec {
    fn default() -> Self {
        Self { direction: default_k0_direction(), magnitude_keg: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    #[default]
    RealOnly,
    Complex,
}

impl From<KernelChoice> for KernelMode {
    fn from(k: KernelChoice) -> Self {
        match k {
            KernelChoice::RealOnly => KernelMode::RealOnly,
            KernelChoice::Complex => KernelMode::Complex,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanSpec {
    /// `k = t e1 + √(|k'_0|² - t²) k̂'_0` for `t` from `t_min_keg` to `t_max_keg`.
    Cut { t_min_keg: f64, t_max_keg: f64, points: usize },
    /// Odd `points × points` patch of tangential offsets around `k'_0`.
    Patch { half_width_keg: f64, points: usize },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Same,
    Down,
    Ground,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub kind: ElementKind,
    #[serde(default = "one_usize")]
    pub n: usize,
    #[serde(default)]
    pub ell: u64,
    #[serde(default)]
    pub ell_prime: u64,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShapeSpec {
    Square,
    SinSquared,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub shape: PulseShapeSpec,
    pub mean_rabi_gamma: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default)]
    pub start_inv_gamma: f64,
    pub end_inv_gamma: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    /// Full-sphere grid; otherwise `directions` (unit solid-angle weight each),
    /// otherwise the single direction `k̂'_0`.
    pub sphere: Option<SphereGrid>,
    pub directions: Option<Vec<[f64; 3]>>,
    /// Defaults to `20 Re Γ_N`.
    pub detuning_half_width_gamma: Option<f64>,
    #[serde(default = "default_detuning_points")]
    pub detuning_points: usize,
}

fn default_detuning_points() -> usize {
    spinwave::dynamics::emission::DEFAULT_DETUNING_POINTS
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    /// Emission time; absent means the asymptotic spectrum.
    pub time_inv_gamma: Option<f64>,
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2Spec {
    pub amplitudes: AmplitudeSpec,
    pub interaction: InteractionSpec,
    pub storage_times_inv_gamma: Vec<f64>,
    #[serde(default = "two")]
    pub overlap_n: usize,
    /// Tuple samples for `overlap_n > 3`.
    #[serde(default = "default_samples")]
    pub overlap_samples: u64,
}

fn two() -> usize {
    2
}

fn default_samples() -> u64 {
    100_000
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeSpec {
    TruncatedCoherent { alpha: f64 },
    Explicit { c0: [f64; 2], c1: [f64; 2], c2: [f64; 2] },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionSpec {
    /// `C6 k_eg⁶ / (ħ Γ)`
    Vdw { c6_dimensionless: f64 },
    /// `C3 k_eg³ / (ħ Γ)`
    Dipolar { c3_dimensionless: f64 },
    IidUniform { width_rad: f64 },
    None,
}

impl From<InteractionSpec> for InteractionModel {
    fn from(s: InteractionSpec) -> Self {
        match s {
            InteractionSpec::Vdw { c6_dimensionless } => InteractionModel::Vdw { c6: c6_dimensionless },
            InteractionSpec::Dipolar { c3_dimensionless } => InteractionModel::Dipolar { c3: c3_dimensionless },
            InteractionSpec::IidUniform { width_rad } => InteractionModel::IidUniform { width: width_rad },
            InteractionSpec::None => InteractionModel::None,
        }
    }
}

impl RunConfig {
    pub fn from_value(v: Value) -> Result<Self, Failure> {
        serde_json::from_value(v).map_err(|e| Failure::Config(format!("invalid config: {e}")))
    }

    pub fn units(&self) -> Result<PhysicalUnits, Failure> {
        Ok(PhysicalUnits::from_nm(self.wavelength_nm)?)
    }

    pub fn build_ensemble(&self) -> Result<AtomicEnsemble, Failure> {
        let spec = &self.ensemble;
        if let Some(path) = &spec.file {
            if spec.geometry.is_some() || spec.atoms.is_some() || spec.density_per_cm3.is_some() {
                return Err(Failure::Config("`ensemble.file` excludes geometry, atoms and density".into()));
            }
            let e = AtomicEnsemble::load(path)?;
            if (e.units().wavelength_nm() - self.wavelength_nm).abs() > 1e-9 * self.wavelength_nm {
                log::warn!("ensemble file wavelength {} nm overrides the config value", e.units().wavelength_nm());
            }
            return Ok(e);
        }
        let geometry = spec.geometry.ok_or_else(|| Failure::Config("`ensemble.geometry` is required".into()))?;
        let count = match (spec.atoms, spec.density_per_cm3) {
            (Some(n), None) => AtomCount::Count(n),
            (None, Some(rho)) => AtomCount::Density(rho),
            _ => return Err(Failure::Config("give exactly one of `ensemble.atoms` and `ensemble.density_per_cm3`".into())),
        };
        Ok(AtomicEnsemble::generate(geometry.into(), count, self.seed, self.units()?)?)
    }

    pub fn k0p(&self) -> Result<WaveVector, Failure> {
        let d = Vector3::from(self.k0p.direction);
        let n = d.norm();
        if !(n > 0.0) || !(self.k0p.magnitude_keg > 0.0) {
            return Err(Failure::Config("k0p needs a non-zero direction and a positive magnitude".into()));
        }
        let v = d / n * self.k0p.magnitude_keg;
        Ok(WaveVector::new(v.x, v.y, v.z)?)
    }

    pub fn axis(&self) -> Result<DipoleAxis, Failure> {
        Ok(DipoleAxis::new(Vector3::from(self.dipole_axis))?)
    }

    pub fn pulse(&self) -> Result<PulseProfile, Failure> {
        let p = self.pulse.ok_or_else(|| Failure::Config("`pulse` is required for this command".into()))?;
        let shape = match p.shape {
            PulseShapeSpec::Square => PulseShape::Square,
            PulseShapeSpec::SinSquared => PulseShape::SinSquared,
        };
        Ok(PulseProfile::new(shape, p.mean_rabi_gamma)?)
    }
}

impl AmplitudeSpec {
    pub fn resolve(&self) -> Result<StateAmplitudes, Failure> {
        match *self {
            AmplitudeSpec::TruncatedCoherent { alpha } => Ok(StateAmplitudes::truncated_coherent(alpha)),
            AmplitudeSpec::Explicit { c0, c1, c2 } => {
                let c = |v: [f64; 2]| Complex64::new(v[0], v[1]);
                Ok(StateAmplitudes::new(c(c0), c(c1), c(c2))?)
            }
        }
    }
}

/// Canonical serialization: sorted keys, integers verbatim, floats in
/// 17-digit scientific notation.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => out.push_str(&i.to_string()),
            (_, Some(u), _) => out.push_str(&u.to_string()),
            (_, _, Some(f)) => out.push_str(&format!("{f:.16e}")),
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&m[k], out);
            }
            out.push('}');
        }
    }
}

pub fn config_hash(v: &Value) -> String {
    Sha256::digest(canonical_json(v).as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parsed `--sweep key=v1,v2,...`; the key is a dotted path into the config.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<Number>,
}

impl Sweep {
    pub fn parse(arg: &str) -> Result<Self, Failure> {
        let (key, list) = arg
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("sweep `{arg}` is not of the form key=v1,v2,...")))?;
        if key.is_empty() {
            return Err(Failure::Config("sweep key is empty".into()));
        }
        let values = list
            .split(',')
            .map(|s| parse_number(s.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|s| Failure::Config(format!("sweep over `{key}` needs numeric values, got `{s}`")))?;
        if values.is_empty() {
            return Err(Failure::Config("sweep has no values".into()));
        }
        Ok(Self { key: key.to_string(), values })
    }

    /// The config with the swept key set to `values[index]`.
    pub fn apply(&self, base: &Value, index: usize) -> Result<Value, Failure> {
        let mut v = base.clone();
        let mut node = &mut v;
        let parts: Vec<&str> = self.key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Failure::Config(format!("sweep key `{}` does not address an object", self.key)))?;
            if i + 1 == parts.len() {
                if let Some(old) = obj.get(*part) {
                    if !old.is_number() {
                        return Err(Failure::Config(format!("sweep key `{}` is not numeric in the config", self.key)));
                    }
                }
                obj.insert(part.to_string(), Value::Number(self.values[index].clone()));
                return Ok(v);
            }
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        }
        unreachable!("split yields at least one part")
    }
}

fn parse_number(s: &str) -> Result<Number, String> {
    if let Ok(u) = s.parse::<u64>() {
        return Ok(Number::from(u));
    }
    if let Ok(i) = s.parse::<i64>() {
        return Ok(Number::from(i));
    }
    s.parse::<f64>().ok().and_then(Number::from_f64).ok_or_else(|| s.to_string())
}

/// Independent per-point seed (SplitMix64 finaliser).
pub fn derive_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
