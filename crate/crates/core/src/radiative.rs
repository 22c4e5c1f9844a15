//! Pair radiation kernel, collective decay rate and single-excitation decay matrix.
//!
//! Separations are dimensionless (`x = k_eg r`) and rates are in units of the
//! single-atom rate `Γ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::ensemble::{AtomicEnsemble, WaveVector};
use crate::numeric::par_sum;
use crate::quadrature::{integrate_2d, DEFAULT_MAX_INTERVALS};
use crate::{Error, Result};

/// Pairs closer than this (in `k_eg r`) lose the dispersive part of the kernel.
pub const NEAR_FIELD: f64 = 1e-3;

const SERIES_CUTOFF: f64 = 1.0;

/// Common orientation of all atomic dipoles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleAxis(Vector3<f64>);

impl DipoleAxis {
    pub fn new(direction: Vector3<f64>) -> Result<Self> {
        let norm = direction.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::invalid("dipole axis must be a finite non-zero vector"));
        }
        Ok(Self(direction / norm))
    }

    pub fn x() -> Self {
        Self(Vector3::x())
    }

    pub fn z() -> Self {
        Self(Vector3::z())
    }

    pub fn unit(&self) -> &Vector3<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMode {
    /// Only the real kernel `f`; Γ_N comes out real.
    #[default]
    RealOnly,
    /// `f + i g` with the dispersive partner `g`.
    Complex,
}

impl KernelMode {
    pub fn name(&self) -> &'static str {
        match self {
            KernelMode::RealOnly => "real_only",
            KernelMode::Complex => "complex",
        }
    }
}

/// Collective rate in units of Γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRate(pub Complex64);

impl ComplexRate {
    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }
}

fn cos_to_axis(x: &Vector3<f64>, r: f64, axis: &DipoleAxis) -> f64 {
    (axis.0.dot(x) / r).clamp(-1.0, 1.0)
}

// j0, j1/x and j2/x² from their power series.
fn bessel_series(x: f64) -> (f64, f64, f64) {
    let u = -0.5 * x * x;
    let (mut j0, mut j1x, mut j2xx) = (0.0, 0.0, 0.0);
    let mut term = 1.0; // u^k / k!
    let (mut d0, mut d1, mut d2) = (1.0, 3.0, 15.0); // (2k+1)!!, (2k+3)!!, (2k+5)!!
    for k in 0..14 {
        j0 += term / d0;
        j1x += term / d1;
        j2xx += term / d2;
        let kk = k as f64 + 1.0;
        term *= u / kk;
        d0 *= 2.0 * kk + 1.0;
        d1 *= 2.0 * kk + 3.0;
        d2 *= 2.0 * kk + 5.0;
    }
    (j0, j1x, j2xx)
}

/// `f(x) = (3/8π) ∫ dΩ_k (1 - (n̂·k̂)²) exp(i k̂·x)`.
pub fn f_pair(x: &Vector3<f64>, axis: &DipoleAxis) -> f64 {
    let r = x.norm();
    if r == 0.0 {
        return 1.0;
    }
    let c2 = cos_to_axis(x, r, axis).powi(2);
    if r < SERIES_CUTOFF {
        let (j0, j1x, j2xx) = bessel_series(r);
        return 1.5 * (j0 - j1x + c2 * j2xx * r * r);
    }
    let (s, c) = r.sin_cos();
    1.5 * ((1.0 - c2) * s / r + (1.0 - 3.0 * c2) * (c / (r * r) - s / (r * r * r)))
}

/// Dispersive partner of [`f_pair`]; `None` inside the near-field cutoff.
pub fn g_pair(x: &Vector3<f64>, axis: &DipoleAxis) -> Option<f64> {
    let r = x.norm();
    if r < NEAR_FIELD {
        return None;
    }
    let c2 = cos_to_axis(x, r, axis).powi(2);
    let (s, c) = r.sin_cos();
    Some(1.5 * (-(1.0 - c2) * c / r + (1.0 - 3.0 * c2) * (s / (r * r) + c / (r * r * r))))
}

pub fn pair_kernel(x: &Vector3<f64>, axis: &DipoleAxis, mode: KernelMode) -> Complex64 {
    let f = f_pair(x, axis);
    match mode {
        KernelMode::RealOnly => Complex64::new(f, 0.0),
        KernelMode::Complex => Complex64::new(f, g_pair(x, axis).unwrap_or(0.0)),
    }
}

/// Direct angular quadrature of the integral defining [`f_pair`].
pub fn f_quadrature(x: &Vector3<f64>, axis: &DipoleAxis, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    let n = axis.0;
    let pref = 3.0 / (8.0 * PI);
    let est = integrate_2d(
        |theta, alpha| {
            let (st, ct) = theta.sin_cos();
            let (sa, ca) = alpha.sin_cos();
            let k = Vector3::new(st * ca, st * sa, ct);
            let w = 1.0 - n.dot(&k).powi(2);
            pref * st * w * k.dot(x).cos()
        },
        (0.0, PI),
        (0.0, 2.0 * PI),
        tol,
        DEFAULT_MAX_INTERVALS,
    )?;
    Ok(est.value)
}

/// Number of distinct pairs inside the near-field cutoff.
pub fn near_field_pairs(e: &AtomicEnsemble) -> usize {
    let r = e.positions();
    (0..r.len())
        .map(|mu| r[mu + 1..].iter().filter(|rn| (r[mu] - *rn).norm() < NEAR_FIELD).count())
        .sum()
}

/// `Γ_N = 1 + (1/N) Σ_{μ≠ν} exp(-i k'_0·(r_μ - r_ν)) K_μν`.
pub fn gamma_n(e: &AtomicEnsemble, k0p: &WaveVector, axis: &DipoleAxis, mode: KernelMode) -> ComplexRate {
    let mag = k0p.magnitude();
    if (mag - 1.0).abs() > 0.1 {
        log::warn!("|k'_0| = {mag:.3} k_eg differs from the emission wavenumber by more than 10%");
    }
    if mode == KernelMode::Complex {
        let close = near_field_pairs(e);
        if close > 0 {
            log::warn!("{close} pairs closer than k r = {NEAR_FIELD}: dispersive part dropped for them");
        }
    }
    let r = e.positions();
    let q = k0p.0;
    let pairs = par_sum(r.len(), |mu| {
        let mut acc = Complex64::new(0.0, 0.0);
        for rn in &r[mu + 1..] {
            let d = r[mu] - rn;
            acc += pair_kernel(&d, axis, mode) * q.dot(&d).cos();
        }
        acc
    });
    ComplexRate(Complex64::new(1.0, 0.0) + pairs * (2.0 / r.len() as f64))
}

/// `M_μν = K_μν / 2` with `M_μμ = 1/2`, so that `dE/dt = -M E`.
pub fn decay_matrix(e: &AtomicEnsemble, axis: &DipoleAxis, mode: KernelMode) -> DMatrix<Complex64> {
    let r = e.positions();
    DMatrix::from_fn(r.len(), r.len(), |mu, nu| {
        if mu == nu {
            Complex64::new(0.5, 0.0)
        } else {
            pair_kernel(&(r[mu] - r[nu]), axis, mode) * 0.5
        }
    })
}
