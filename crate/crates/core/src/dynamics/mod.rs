//! Retrieval of stored spin waves: π-pulse transfer, decay of the symmetric
//! amplitude, emitted photon amplitudes and the two-photon cascade.
//!
//! Times are in units of `1/Γ`, rates and detunings in units of `Γ`. The
//! field coupling `g_φ` is an overall scale and is set to 1.

pub mod cascade;
pub mod emission;
pub mod fit;
pub mod ode;
pub mod oracle;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::radiative::ComplexRate;
use crate::{Error, Result};

pub use cascade::{cascade_ode_check, cascade_two_photon, CascadeResult};
pub use emission::{
    emission_spectrum, mode_amplitude, phase_matched_weights, photon_budget, ModeFunction, ModeGrid, PhotonBudget,
    SpectrumRow,
};
pub use fit::{fit_lorentzian, LorentzFit};
pub use oracle::{single_exc_ode_oracle, OdeOracleResult};

/// Largest accepted `Re(Γ_N) T / 2` (strict).
pub const VALIDITY_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseShape {
    Square,
    SinSquared,
}

/// Resonant π-pulse with mean Rabi frequency `Ω̄`; the duration is fixed
/// to `T = π/Ω̄` so that `β(T) = π/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseProfile {
    shape: PulseShape,
    mean_rabi: f64,
}

impl PulseProfile {
    pub fn new(shape: PulseShape, mean_rabi: f64) -> Result<Self> {
        if !(mean_rabi > 0.0) || !mean_rabi.is_finite() {
            return Err(Error::invalid(format!("mean Rabi frequency must be positive, got {mean_rabi}")));
        }
        Ok(Self { shape, mean_rabi })
    }

    pub fn shape(&self) -> PulseShape {
        self.shape
    }

    pub fn mean_rabi(&self) -> f64 {
        self.mean_rabi
    }

    pub fn duration(&self) -> f64 {
        PI / self.mean_rabi
    }

    /// Instantaneous Rabi frequency `Ω_L(t)`.
    pub fn rabi(&self, t: f64) -> f64 {
        let tt = self.duration();
        if !(0.0..tt).contains(&t) {
            return 0.0;
        }
        match self.shape {
            PulseShape::Square => self.mean_rabi,
            PulseShape::SinSquared => 2.0 * self.mean_rabi * (PI * t / tt).sin().powi(2),
        }
    }

    /// Pulse area so far, `β(t) = ∫_0^t Ω_L/2`.
    pub fn beta(&self, t: f64) -> f64 {
        let tt = self.duration();
        let t = t.clamp(0.0, tt);
        match self.shape {
            PulseShape::Square => 0.5 * self.mean_rabi * t,
            PulseShape::SinSquared => self.mean_rabi * (0.5 * t - tt * (2.0 * PI * t / tt).sin() / (4.0 * PI)),
        }
    }
}

/// Complex amplitude sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrace {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl AmplitudeTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `𝓔_0(t) = sin β(t) exp(-Γ_N t / 2)`.
pub fn e0_of_t(pulse: &PulseProfile, gamma: ComplexRate, times: &[f64]) -> AmplitudeTrace {
    let values = times.iter().map(|&t| (-gamma.0 * (0.5 * t)).exp() * pulse.beta(t).sin()).collect();
    AmplitudeTrace { times: times.to_vec(), values }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub ok: bool,
    pub ratio: f64,
}

/// Checks `Re(Γ_N) T / 2 < 0.1`, the condition for separating excitation and decay.
pub fn validity_check(pulse: &PulseProfile, gamma: ComplexRate) -> Validity {
    let ratio = gamma.re() * pulse.duration() / 2.0;
    Validity { ok: within_threshold(ratio), ratio }
}

fn within_threshold(ratio: f64) -> bool {
    ratio < VALIDITY_THRESHOLD
}

/// Evenly spaced grid of `count` points on `[start, end]`.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count).map(|i| start + (end - start) * i as f64 / (count - 1) as f64).collect(),
    }
}
