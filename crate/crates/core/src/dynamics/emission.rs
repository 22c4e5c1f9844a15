//! Single-photon emission from the symmetric timed-Dicke state after fast
//! (instantaneous) preparation.
//!
//! Field modes are labelled by a direction on the emission shell `|k| = k_eg`
//! and a detuning `Δω_k`. Sums over modes use the measure
//! `(1/2π) (3/8π) (1 - (k̂·n̂)²) dΩ dΔ`, for which one stored excitation
//! carries exactly one photon.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dicke::{CouplingValue, TimedDicke};
use crate::ensemble::WaveVector;
use crate::quadrature::gauss_legendre;
use crate::radiative::{ComplexRate, DipoleAxis};
use crate::{Error, Result};

pub const DEFAULT_DETUNING_POINTS: usize = 512;
pub const DEFAULT_DETUNING_SPAN: f64 = 20.0;

/// Product grid of emission directions and detunings with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    directions: Vec<Vector3<f64>>,
    solid_angle: Vec<f64>,
    detunings: Vec<f64>,
    detuning_weights: Vec<f64>,
    axis: DipoleAxis,
}

impl ModeGrid {
    pub fn new(
        directions: Vec<Vector3<f64>>,
        solid_angle: Vec<f64>,
        detunings: Vec<f64>,
        detuning_weights: Vec<f64>,
        axis: DipoleAxis,
    ) -> Result<Self> {
        if directions.is_empty() || detunings.is_empty() {
            return Err(Error::invalid("mode grid needs at least one direction and one detuning"));
        }
        if directions.len() != solid_angle.len() || detunings.len() != detuning_weights.len() {
            return Err(Error::invalid("mode grid weights do not match the nodes"));
        }
        let mut units = Vec::with_capacity(directions.len());
        for d in directions {
            let n = d.norm();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::invalid("mode directions must be non-zero"));
            }
            units.push(d / n);
        }
        let scale = detunings.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1.0);
        let symmetric = detunings.windows(2).all(|w| w[0] < w[1])
            && detunings.iter().zip(detunings.iter().rev()).all(|(a, b)| (a + b).abs() <= 1e-12 * scale);
        if !symmetric {
            return Err(Error::invalid("detuning grid must be increasing and symmetric about 0"));
        }
        Ok(Self { directions: units, solid_angle, detunings, detuning_weights, axis })
    }

    /// Uniform detuning grid of `count` points on `[-half_width, half_width]`
    /// with trapezoidal weights.
    pub fn uniform_detunings(half_width: f64, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(half_width > 0.0) || count < 2 {
            return Err(Error::invalid("detuning grid needs half_width > 0 and at least two points"));
        }
        let step = 2.0 * half_width / (count - 1) as f64;
        let nodes = (0..count).map(|i| -half_width + step * i as f64).collect();
        let weights = (0..count).map(|i| if i == 0 || i == count - 1 { 0.5 * step } else { step }).collect();
        Ok((nodes, weights))
    }

    /// Default detuning grid: 512 points spanning `±20 Re Γ_N`.
    pub fn default_detunings(gamma: ComplexRate) -> Result<(Vec<f64>, Vec<f64>)> {
        Self::uniform_detunings(DEFAULT_DETUNING_SPAN * gamma.re().abs(), DEFAULT_DETUNING_POINTS)
    }

    /// One direction with unit angular weight.
    pub fn single_direction(direction: Vector3<f64>, detunings: (Vec<f64>, Vec<f64>), axis: DipoleAxis) -> Result<Self> {
        Self::new(vec![direction], vec![1.0], detunings.0, detunings.1, axis)
    }

    /// Full sphere: Gauss–Legendre in `cos θ` (about the lab z axis) times a
    /// uniform azimuthal grid.
    pub fn sphere(n_theta: usize, n_phi: usize, detunings: (Vec<f64>, Vec<f64>), axis: DipoleAxis) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::invalid("sphere grid needs n_theta, n_phi >= 1"));
        }
        let (u, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut dirs = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (ct, wt) in u.iter().zip(&w) {
            let st = (1.0 - ct * ct).sqrt();
            for j in 0..n_phi {
                let phi = dphi * (j as f64 + 0.5);
                dirs.push(Vector3::new(st * phi.cos(), st * phi.sin(), *ct));
                weights.push(wt * dphi);
            }
        }
        Self::new(dirs, weights, detunings.0, detunings.1, axis)
    }

    pub fn directions(&self) -> &[Vector3<f64>] {
        &self.directions
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn axis(&self) -> &DipoleAxis {
        &self.axis
    }

    pub fn mode_count(&self) -> usize {
        self.directions.len() * self.detunings.len()
    }

    /// Flat index of mode `(direction, detuning)`.
    pub fn index(&self, direction: usize, detuning: usize) -> usize {
        direction * self.detunings.len() + detuning
    }

    /// Angular weight `(3/8π)(1 - (k̂·n̂)²) dΩ` of one direction.
    pub fn angular_measure(&self, direction: usize) -> f64 {
        let c = self.axis.unit().dot(&self.directions[direction]);
        3.0 / (8.0 * PI) * (1.0 - c * c) * self.solid_angle[direction]
    }

    /// Weight of one mode in sums over the grid.
    pub fn measure(&self, direction: usize, detuning: usize) -> f64 {
        self.angular_measure(direction) * self.detuning_weights[detuning] / (2.0 * PI)
    }

    /// Wave vectors on the emission shell for every direction.
    pub fn wave_vectors(&self) -> Vec<WaveVector> {
        self.directions.iter().map(|d| WaveVector::from(*d)).collect()
    }
}

/// `G^φ(t) = [(exp(-(Γ_N/2 + iΔ) t) - 1) / (Γ_N/2 + iΔ)] V_{0G}(k)`;
/// `t = ∞` gives the asymptotic value.
pub fn mode_amplitude(gamma: ComplexRate, v0g: CouplingValue, detuning: f64, t: f64) -> Complex64 {
    let a = gamma.0 * 0.5 + Complex64::new(0.0, detuning);
    let decayed = if t.is_infinite() { Complex64::new(0.0, 0.0) } else { (-a * t).exp() };
    (decayed - 1.0) / a * v0g.0
}

fn ground_couplings(system: &TimedDicke<'_>, grid: &ModeGrid) -> Result<Vec<CouplingValue>> {
    grid.wave_vectors().par_iter().map(|k| system.v_ground(0, k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub detuning: f64,
    pub direction: Vector3<f64>,
    pub intensity: f64,
}

/// `|G^φ(t)|²` on every grid mode, direction-major. With `normalize` the
/// largest value is scaled to 1.
pub fn emission_spectrum(
    system: &TimedDicke<'_>,
    gamma: ComplexRate,
    grid: &ModeGrid,
    t: f64,
    normalize: bool,
) -> Result<Vec<SpectrumRow>> {
    let v = ground_couplings(system, grid)?;
    let mut rows = Vec::with_capacity(grid.mode_count());
    for (d, vd) in grid.directions().iter().zip(&v) {
        for &delta in grid.detunings() {
            let intensity = mode_amplitude(gamma, *vd, delta, t).norm_sqr();
            rows.push(SpectrumRow { detuning: delta, direction: *d, intensity });
        }
    }
    if normalize {
        let peak = rows.iter().fold(0.0f64, |m, r| m.max(r.intensity));
        if peak > 0.0 {
            rows.iter_mut().for_each(|r| r.intensity /= peak);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonBudget {
    /// `|𝓔_0(t)|²`
    pub remaining: f64,
    /// `Σ_φ |G^φ(t)|²` with the grid measure.
    pub emitted: f64,
}

impl PhotonBudget {
    pub fn total(&self) -> f64 {
        self.remaining + self.emitted
    }
}

/// Excitation bookkeeping after fast preparation of the symmetric state.
pub fn photon_budget(system: &TimedDicke<'_>, gamma: ComplexRate, grid: &ModeGrid, t: f64) -> Result<PhotonBudget> {
    let v = ground_couplings(system, grid)?;
    let mut per_direction = Vec::with_capacity(v.len());
    for (d, vd) in v.iter().enumerate() {
        let s: f64 = (0..grid.detunings().len())
            .map(|j| mode_amplitude(gamma, *vd, grid.detunings()[j], t).norm_sqr() * grid.measure(d, j))
            .sum();
        per_direction.push(s);
    }
    let remaining = if t.is_infinite() { 0.0 } else { (-gamma.re() * t).exp() };
    Ok(PhotonBudget { remaining, emitted: crate::numeric::tree_sum_real(&per_direction) })
}

/// Discrete phase-matched mode function `w_φ ∝ V_{0G}(k) / (Γ_N/2 + iΔ)`,
/// normalised so that `Σ |w_φ|² · measure = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction {
    /// Direction-major, see [`ModeGrid::index`].
    pub weights: Vec<Complex64>,
}

pub fn phase_matched_weights(system: &TimedDicke<'_>, gamma: ComplexRate, grid: &ModeGrid) -> Result<ModeFunction> {
    let v = ground_couplings(system, grid)?;
    let mut weights = Vec::with_capacity(grid.mode_count());
    let mut norm = 0.0;
    for (d, vd) in v.iter().enumerate() {
        for (j, &delta) in grid.detunings().iter().enumerate() {
            let w = vd.0 / (gamma.0 * 0.5 + Complex64::new(0.0, delta));
            norm += w.norm_sqr() * grid.measure(d, j);
            weights.push(w);
        }
    }
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate("phase-matched mode has zero weight on this grid".into()));
    }
    let scale = 1.0 / norm.sqrt();
    weights.iter_mut().for_each(|w| *w *= scale);
    Ok(ModeFunction { weights })
}
