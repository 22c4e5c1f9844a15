//! Two-photon cascade from the doubly excited symmetric state.
//!
//! The symmetric two-excitation amplitude decays as `exp(-Γ_N t)`, feeding
//! one-photon-emitted amplitudes `𝓔^φ_0(t)` which in turn decay at `Γ_N/2`
//! into the two-photon amplitudes `G^{φφ'}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::ode::{solve, State, Tolerances};
use super::{AmplitudeTrace, ModeGrid};
use crate::dicke::{CouplingValue, TimedDicke};
use crate::radiative::ComplexRate;
use crate::{Error, Result};

/// Largest mode count for the dense `G^{φφ'}` table.
pub const MAX_CASCADE_MODES: usize = 4096;

#[derive(Debug, Clone)]
pub struct CascadeResult {
    /// `𝓔_{0[2]}(t) / 𝓔_{0[2]}(0)`
    pub e02: AmplitudeTrace,
    /// `𝓔^φ_0(t)` per mode, direction-major.
    pub ephi0: Vec<AmplitudeTrace>,
    /// Asymptotic `G^{φφ'}`.
    pub g_table: DMatrix<Complex64>,
    /// `|V^{[1,2]}_{00}(k)|² / |iΔ + Γ_N/2|²` per mode.
    pub first_photon: Vec<f64>,
    /// `|V_{0G}(k)|² / |iΔ + Γ_N/2|²` per mode.
    pub second_photon: Vec<f64>,
}

struct Couplings {
    down: Vec<CouplingValue>,
    ground: Vec<CouplingValue>,
}

fn couplings(system: &TimedDicke<'_>, grid: &ModeGrid) -> Result<Couplings> {
    let ks = grid.wave_vectors();
    let down = ks.par_iter().map(|k| system.v_down(2, 0, 0, k)).collect::<Result<Vec<_>>>()?;
    let ground = ks.par_iter().map(|k| system.v_ground(0, k)).collect::<Result<Vec<_>>>()?;
    Ok(Couplings { down, ground })
}

fn denominator(gamma: ComplexRate, detuning: f64) -> Complex64 {
    Complex64::new(0.0, detuning) + gamma.0 * 0.5
}

/// Closed-form cascade stages on the mode grid.
pub fn cascade_two_photon(
    system: &TimedDicke<'_>,
    gamma: ComplexRate,
    grid: &ModeGrid,
    times: &[f64],
) -> Result<CascadeResult> {
    if system.atoms() < 2 {
        return Err(Error::invalid("a double spin wave needs at least two atoms"));
    }
    let modes = grid.mode_count();
    if modes > MAX_CASCADE_MODES {
        return Err(Error::TooLarge(format!("{modes} modes exceed the cascade table limit {MAX_CASCADE_MODES}")));
    }
    let c = couplings(system, grid)?;
    let g = gamma.0;
    let n_det = grid.detunings().len();
    let mode = |m: usize| (m / n_det, grid.detunings()[m % n_det]);

    let e02 = AmplitudeTrace { times: times.to_vec(), values: times.iter().map(|&t| (-g * t).exp()).collect() };
    let ephi0 = (0..modes)
        .map(|m| {
            let (d, delta) = mode(m);
            let den = denominator(gamma, delta);
            let values = times
                .iter()
                .map(|&t| {
                    let fast = (-(Complex64::new(0.0, delta) + g) * t).exp();
                    let slow = (-g * (0.5 * t)).exp();
                    c.down[d].0 * (fast - slow) / den
                })
                .collect();
            AmplitudeTrace { times: times.to_vec(), values }
        })
        .collect();

    let first: Vec<Complex64> = (0..modes)
        .map(|m| {
            let (d, delta) = mode(m);
            c.down[d].0 / denominator(gamma, delta)
        })
        .collect();
    let second: Vec<Complex64> = (0..modes)
        .map(|m| {
            let (d, delta) = mode(m);
            c.ground[d].0 / denominator(gamma, delta)
        })
        .collect();
    let g_table = DMatrix::from_fn(modes, modes, |i, j| {
        let eps: f64 = if i == j { 2.0 } else { 1.0 };
        first[i] * second[j] / eps.sqrt()
    });
    Ok(CascadeResult {
        e02,
        ephi0,
        g_table,
        first_photon: first.iter().map(|v| v.norm_sqr()).collect(),
        second_photon: second.iter().map(|v| v.norm_sqr()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeCheck {
    pub max_abs_error: f64,
    pub max_value: f64,
}

impl CascadeCheck {
    pub fn relative_error(&self) -> f64 {
        self.max_abs_error / self.max_value
    }
}

/// Integrates the cascade equations along the phase-matched direction for
/// the given detunings and compares the asymptotic two-photon amplitudes
/// with the closed form.
///
/// Each ordered emission path `(φ first, φ' second)` is integrated separately;
/// the physical amplitude is the sum of both orders divided by `√ε`.
pub fn cascade_ode_check(system: &TimedDicke<'_>, gamma: ComplexRate, detunings: &[f64]) -> Result<CascadeCheck> {
    if !(gamma.re() > 0.0) {
        return Err(Error::invalid("cascade check needs Re Γ_N > 0"));
    }
    let k = *system.k0p();
    let down = system.v_down(2, 0, 0, &k)?.0;
    let ground = system.v_ground(0, &k)?.0;
    let m = detunings.len();
    let g = gamma.0;
    let dets: Vec<Complex64> = detunings.iter().map(|&d| Complex64::new(0.0, d)).collect();
    // state: [E02, X_φ (m), Y_{φφ'} (m²)]
    let rhs = |t: f64, y: &State| {
        let mut dy = State::zeros(y.len());
        dy[0] = -g * y[0];
        for p in 0..m {
            dy[1 + p] = -g * 0.5 * y[1 + p] - down * (-dets[p] * t).exp() * y[0];
        }
        for p in 0..m {
            for q in 0..m {
                dy[1 + m + p * m + q] = -ground * (-dets[q] * t).exp() * y[1 + p];
            }
        }
        dy
    };
    let mut y0 = State::zeros(1 + m + m * m);
    y0[0] = Complex64::new(1.0, 0.0);
    let t_end = 70.0 / gamma.re();
    let tol = Tolerances { rtol: 1e-11, atol: 1e-14, ..Tolerances::default() };
    let y = solve(rhs, 0.0, y0, &[t_end], &[], tol)?.pop().expect("one output");

    let mut check = CascadeCheck { max_abs_error: 0.0, max_value: 0.0 };
    for p in 0..m {
        for q in 0..m {
            let eps: f64 = if p == q { 2.0 } else { 1.0 };
            let ode = (y[1 + m + p * m + q] + y[1 + m + q * m + p]) / eps.sqrt();
            let closed = down / denominator(gamma, detunings[p]) * ground / denominator(gamma, detunings[q]) / eps.sqrt();
            check.max_abs_error = check.max_abs_error.max((ode - closed).norm());
            check.max_value = check.max_value.max(closed.norm());
        }
    }
    Ok(check)
}
