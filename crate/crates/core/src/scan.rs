//! Wave-vector scans of the single-excitation couplings on the shell `|k| = |k'_0|`.
//!
//! Profiles are normalised so that every symmetric quantity equals 1 at
//! `k = k'_0`: `V^[1,1]_00 / N`, `|V_0G| / √N`, and the non-symmetric total
//! `Σ_ℓ |V^[1,1]_0ℓ|` is divided by `N` as well.

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dicke::{helmert_norm, TimedDicke};
use crate::ensemble::WaveVector;
use crate::numeric::half_max_width;
use crate::{Error, Result};

/// Orthonormal tangent vectors `(e1, e2)` at the pole `k̂'_0`, with `e1`
/// along the projection of `x̂` when possible.
pub fn shell_frame(k0p: &WaveVector) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
    let mag = k0p.magnitude();
    if !(mag > 0.0) {
        return Err(Error::invalid("k'_0 must be non-zero for a shell scan"));
    }
    let pole = k0p.0 / mag;
    let mut e1 = Vector3::x() - pole * pole.x;
    if e1.norm() < 1e-8 {
        e1 = Vector3::y() - pole * pole.y;
    }
    let e1 = e1.normalize();
    let e2 = pole.cross(&e1);
    Ok((e1, e2, pole))
}

/// Points `k = t e1 + √(|k'_0|² - t²) k̂'_0`; for `k'_0 ∥ ẑ` this is
/// `(t, 0, √(k'²_0 - t²))`. Values beyond the shell are clipped.
pub fn cut_1d(k0p: &WaveVector, t: &[f64]) -> Result<Vec<WaveVector>> {
    let (e1, _, pole) = shell_frame(k0p)?;
    let mag = k0p.magnitude();
    let mut clipped = 0;
    let points = t
        .iter()
        .map(|&v| {
            let v = if v.abs() > mag {
                clipped += 1;
                v.signum() * mag
            } else {
                v
            };
            WaveVector::from(e1 * v + pole * (mag * mag - v * v).max(0.0).sqrt())
        })
        .collect();
    if clipped > 0 {
        log::warn!("{clipped} scan points outside the shell |k| = {mag} were clipped");
    }
    Ok(points)
}

/// Square patch of tangential offsets around `k'_0`, row-major in `v`, `u`.
#[derive(Debug, Clone)]
pub struct ShellPatch {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub points: Vec<WaveVector>,
}

impl ShellPatch {
    /// Index of `(u[i], v[j])` in `points`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.u.len() + i
    }

    pub fn center(&self) -> usize {
        self.index(self.u.len() / 2, self.v.len() / 2)
    }
}

/// `n × n` patch (odd `n`, so the centre is exactly `k'_0`) with tangential
/// offsets in `[-half_width, half_width]`.
pub fn shell_patch(k0p: &WaveVector, half_width: f64, n: usize) -> Result<ShellPatch> {
    if n % 2 == 0 || n < 3 {
        return Err(Error::invalid("shell patch needs an odd number of points >= 3 per side"));
    }
    let mag = k0p.magnitude();
    if !(half_width > 0.0) || half_width * 2f64.sqrt() >= mag {
        return Err(Error::invalid(format!("patch half width must lie in (0, |k'_0|/√2), got {half_width}")));
    }
    let (e1, e2, pole) = shell_frame(k0p)?;
    let axis: Vec<f64> = (0..n).map(|i| half_width * (2.0 * i as f64 / (n - 1) as f64 - 1.0)).collect();
    let mut points = Vec::with_capacity(n * n);
    for &v in &axis {
        for &u in &axis {
            let w = (mag * mag - u * u - v * v).sqrt();
            points.push(WaveVector::from(e1 * u + e2 * v + pole * w));
        }
    }
    Ok(ShellPatch { u: axis.clone(), v: axis, points })
}

/// Normalised single-excitation couplings at one wave vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSample {
    /// `V^[1,1]_00(k) / N`
    pub symmetric: Complex64,
    /// `Σ_ℓ |V^[1,1]_0ℓ(k)| / N` (equal weight on every non-symmetric state)
    pub nonsymmetric_total: f64,
    /// `Σ_γ S^ℓ_γ / √(ℓ(ℓ+1))` for `ℓ = N - 1`
    pub s_aggregate: Complex64,
    /// `V_0G(k) / √N`
    pub v0g: Complex64,
}

pub fn coupling_sample(system: &TimedDicke<'_>, k: &WaveVector) -> Result<CouplingSample> {
    let n = system.atoms();
    if n < 2 {
        return Err(Error::invalid("coupling scans need at least two atoms"));
    }
    let nf = n as f64;
    let r = system.ensemble().positions();
    let q = system.detuned(k).0;
    // w_γ = exp(i (k'_0 - k)·r), the argument of the non-symmetric couplings
    let w: Vec<Complex64> = r.iter().map(|p| Complex64::cis(-q.dot(p))).collect();
    let s = system.structure_factor(k);
    let mut prefix = Complex64::new(0.0, 0.0);
    let mut total = 0.0;
    let mut last_sum = Complex64::new(0.0, 0.0);
    for (idx, wg) in w.iter().enumerate() {
        if idx > 0 {
            let ell = idx as u64;
            last_sum = prefix - wg * ell as f64;
            total += last_sum.norm() / (nf * helmert_norm(ell)).sqrt();
        }
        prefix += wg;
    }
    let ell = (n - 1) as u64;
    Ok(CouplingSample {
        symmetric: Complex64::new(s.norm_sqr() / (nf * nf), 0.0),
        nonsymmetric_total: s.norm() * total / nf,
        s_aggregate: last_sum.conj() / helmert_norm(ell).sqrt(),
        v0g: s / nf,
    })
}

pub fn coupling_profile(system: &TimedDicke<'_>, ks: &[WaveVector]) -> Result<Vec<CouplingSample>> {
    ks.par_iter().map(|k| coupling_sample(system, k)).collect()
}

/// FWHM of a sampled profile along a 1D cut parameter.
pub fn profile_fwhm(t: &[f64], values: &[f64]) -> Option<f64> {
    half_max_width(t, values)
}
