//! Interaction-induced dephasing of stored multiple excitations.
//!
//! A pair of atoms that are both excited for a storage time `T` picks up a
//! phase `Φ_μν = U_μν T / ħ`. Interaction strengths are given in the
//! dimensionless units used throughout: `c6` and `c3` are `C6 k_eg⁶ / (ħ Γ)`
//! and `C3 k_eg³ / (ħ Γ)`, `T` is in units of `1/Γ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dicke::{helmert_norm, TupleRanking};
use crate::ensemble::AtomicEnsemble;
use crate::numeric::{binomial, par_sum};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteractionModel {
    /// `Φ = c6 T / x⁶`
    Vdw { c6: f64 },
    /// `Φ = c3 T / x³`
    Dipolar { c3: f64 },
    /// Independent phases, uniform on `[0, width)`, for `T > 0`.
    IidUniform { width: f64 },
    None,
}

impl InteractionModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InteractionModel::Vdw { c6 } => c6.is_finite() && c6 >= 0.0,
            InteractionModel::Dipolar { c3 } => c3.is_finite() && c3 >= 0.0,
            InteractionModel::IidUniform { width } => (0.0..=2.0 * PI).contains(&width),
            InteractionModel::None => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid interaction model {self:?}")))
        }
    }
}

/// Symmetric pair-phase matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix(DMatrix<f64>);

impl PhaseMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("phase matrix must be square"));
        }
        let n = m.nrows();
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::invalid("phase matrix must have a zero diagonal"));
            }
            for j in 0..i {
                if m[(i, j)] != m[(j, i)] || !m[(i, j)].is_finite() {
                    return Err(Error::invalid("phase matrix must be finite and symmetric"));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        self.0[(mu, nu)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    fn phase(&self, mu: usize, nu: usize) -> Complex64 {
        Complex64::cis(self.0[(mu, nu)])
    }
}

pub fn phase_matrix(e: &AtomicEnsemble, model: InteractionModel, storage_time: f64, seed: u64) -> Result<PhaseMatrix> {
    model.validate()?;
    if !(storage_time >= 0.0) || !storage_time.is_finite() {
        return Err(Error::invalid(format!("storage time must be >= 0, got {storage_time}")));
    }
    let n = e.len();
    let mut m = DMatrix::zeros(n, n);
    if storage_time == 0.0 {
        return Ok(PhaseMatrix(m));
    }
    let r = e.positions();
    let power_law = |strength: f64, power: i32, m: &mut DMatrix<f64>| -> Result<()> {
        if strength == 0.0 {
            return Ok(());
        }
        for mu in 0..n {
            for nu in mu + 1..n {
                let x = (r[mu] - r[nu]).norm();
                if x == 0.0 {
                    return Err(Error::DivergentPhase(mu, nu));
                }
                let phi = strength * storage_time / x.powi(power);
                m[(mu, nu)] = phi;
                m[(nu, mu)] = phi;
            }
        }
        Ok(())
    };
    match model {
        InteractionModel::Vdw { c6 } => power_law(c6, 6, &mut m)?,
        InteractionModel::Dipolar { c3 } => power_law(c3, 3, &mut m)?,
        InteractionModel::IidUniform { width } => {
            if width > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for mu in 0..n {
                    for nu in mu + 1..n {
                        let phi = rng.random_range(0.0..width);
                        m[(mu, nu)] = phi;
                        m[(nu, mu)] = phi;
                    }
                }
            }
        }
        InteractionModel::None => {}
    }
    Ok(PhaseMatrix(m))
}

/// Amplitudes of the vacuum, one- and two-excitation symmetric components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateAmplitudes {
    pub c0: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
}

impl StateAmplitudes {
    pub fn new(c0: Complex64, c1: Complex64, c2: Complex64) -> Result<Self> {
        let norm = c0.norm_sqr() + c1.norm_sqr() + c2.norm_sqr();
        if !(norm <= 1.0 + 1e-12) {
            return Err(Error::invalid(format!("amplitudes have total weight {norm} > 1")));
        }
        Ok(Self { c0, c1, c2 })
    }

    /// Coherent-state amplitudes `exp(-|α|²/2) αⁿ/√n!` truncated at `n = 2`.
    pub fn truncated_coherent(alpha: f64) -> Self {
        let pre = (-0.5 * alpha * alpha).exp();
        Self {
            c0: Complex64::new(pre, 0.0),
            c1: Complex64::new(pre * alpha, 0.0),
            c2: Complex64::new(pre * alpha * alpha / 2f64.sqrt(), 0.0),
        }
    }
}

/// `2|c2|² / (|c1|² + 2|c2|²)²`, the undephased value.
pub fn g2_zero(c: &StateAmplitudes) -> Result<f64> {
    let (p1, p2) = (c.c1.norm_sqr(), c.c2.norm_sqr());
    let den = (p1 + 2.0 * p2).powi(2);
    if den == 0.0 {
        return Err(Error::Degenerate("g2 undefined without excitations".into()));
    }
    Ok(2.0 * p2 / den)
}

/// `N⁻² Σ_{μν} exp(iΦ_μν)` including the diagonal.
pub fn mean_phase_factor(phi: &PhaseMatrix) -> Complex64 {
    let n = phi.len();
    let total = par_sum(n, |mu| (0..n).map(|nu| phi.phase(mu, nu)).sum());
    total / (n as f64 * n as f64)
}

/// Spin-wave `g²` after dephasing, with unrestricted pair sums.
pub fn g2_of_t(c: &StateAmplitudes, phi: &PhaseMatrix) -> Result<f64> {
    let n = phi.len();
    if n < 2 {
        return Err(Error::invalid("g2 needs at least two atoms"));
    }
    let nf = n as f64;
    let rows: Vec<Complex64> = (0..n).into_par_iter().map(|mu| (0..n).map(|nu| phi.phase(mu, nu)).sum()).collect();
    let total: Complex64 = crate::numeric::tree_sum(&rows);
    let row_power: f64 = crate::numeric::tree_sum_real(&rows.iter().map(|r| r.norm_sqr()).collect::<Vec<_>>());
    let num = c.c2.norm_sqr() * (total * (2f64.sqrt() / (nf * nf))).norm_sqr();
    let den = (c.c1.norm_sqr() + c.c2.norm_sqr() * 2.0 / (nf * nf * nf) * row_power).powi(2);
    if den == 0.0 {
        return Err(Error::Degenerate("g2 undefined without excitations".into()));
    }
    Ok(num / den)
}

/// Large-dephasing form `4 g²(0) |N⁻² Σ exp(iΦ)|²`.
pub fn g2_asymptotic(c: &StateAmplitudes, phi: &PhaseMatrix) -> Result<f64> {
    Ok(4.0 * g2_zero(c)? * mean_phase_factor(phi).norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapEstimate {
    pub value: Complex64,
    /// Zero for exact enumeration.
    pub std_error: f64,
    pub samples: u64,
}

fn tuple_phase(phi: &PhaseMatrix, tuple: &[usize]) -> Complex64 {
    let mut s = 0.0;
    for (l, &a) in tuple.iter().enumerate() {
        for &b in &tuple[l + 1..] {
            s += phi.get(a, b);
        }
    }
    Complex64::cis(s)
}

/// `⟨E_0[n]|Φ⟩ = binom(N, n)⁻¹ Σ_{tuples} exp(i Σ_{l<j} Φ)`, by exact
/// enumeration (`n ≤ 3`).
pub fn overlap_symmetric(phi: &PhaseMatrix, n: usize) -> Result<OverlapEstimate> {
    let atoms = phi.len();
    if n == 0 || n > atoms {
        return Err(Error::invalid(format!("excitation number {n} outside 1..={atoms}")));
    }
    if n > 3 {
        return Err(Error::invalid("exact overlaps are enumerated for n <= 3; use overlap_symmetric_mc"));
    }
    let count = binomial(atoms as u64, n as u64).ok_or_else(|| Error::TooLarge("tuple count".into()))?;
    let total = match n {
        1 => Complex64::new(atoms as f64, 0.0),
        2 => par_sum(atoms, |a| (a + 1..atoms).map(|b| phi.phase(a, b)).sum()),
        _ => par_sum(atoms, |a| {
            let mut s = Complex64::new(0.0, 0.0);
            for b in a + 1..atoms {
                let ab = phi.get(a, b);
                for c in b + 1..atoms {
                    s += Complex64::cis(ab + phi.get(a, c) + phi.get(b, c));
                }
            }
            s
        }),
    };
    Ok(OverlapEstimate { value: total / count as f64, std_error: 0.0, samples: count })
}

/// Monte Carlo estimate of [`overlap_symmetric`] from uniformly sampled tuples.
pub fn overlap_symmetric_mc(phi: &PhaseMatrix, n: usize, samples: u64, seed: u64) -> Result<OverlapEstimate> {
    let atoms = phi.len();
    if n == 0 || n > atoms {
        return Err(Error::invalid(format!("excitation number {n} outside 1..={atoms}")));
    }
    if samples < 2 {
        return Err(Error::invalid("Monte Carlo needs at least two samples"));
    }
    const CHUNK: u64 = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(Complex64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let todo = CHUNK.min(samples - c * CHUNK);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sq = 0.0;
            for _ in 0..todo {
                let mut t = sample(&mut rng, atoms, n).into_vec();
                t.sort_unstable();
                let v = tuple_phase(phi, &t);
                sum += v;
                sq += v.norm_sqr();
            }
            (sum, sq)
        })
        .collect();
    let sum: Complex64 = parts.iter().map(|p| p.0).sum();
    let sq: f64 = parts.iter().map(|p| p.1).sum();
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sq / m - mean.norm_sqr()) * m / (m - 1.0)).max(0.0);
    Ok(OverlapEstimate { value: mean, std_error: (var / m).sqrt(), samples })
}

/// `⟨E_ℓ[2]|Φ⟩ = (𝓛 𝒩)^{-1/2} Σ_{j≤ℓ} [exp(iΦ_{j}) - exp(iΦ_{ℓ+1})]` over colex pair ranks.
pub fn overlap_nonsymmetric_2(phi: &PhaseMatrix, ell: u64) -> Result<Complex64> {
    let ranking = TupleRanking::new(phi.len(), 2)?;
    if ell == 0 || ell >= ranking.count() {
        return Err(Error::OutOfRange(format!("ell = {ell} outside 1..{}", ranking.count())));
    }
    let mut prefix = Complex64::new(0.0, 0.0);
    let mut last = Complex64::new(0.0, 0.0);
    for (i, t) in ranking.iter().take(ell as usize + 1).enumerate() {
        let p = phi.phase(t[0], t[1]);
        if (i as u64) < ell {
            prefix += p;
        } else {
            last = p;
        }
    }
    let norm = (helmert_norm(ell) * ranking.count() as f64).sqrt();
    Ok((prefix - last * ell as f64) / norm)
}

/// All non-symmetric two-excitation overlaps, `ℓ = 1..𝒩-1`, via one prefix pass.
pub fn overlap_nonsymmetric_2_all(phi: &PhaseMatrix) -> Result<Vec<Complex64>> {
    let ranking = TupleRanking::new(phi.len(), 2)?;
    let count = ranking.count();
    let norm = count as f64;
    let mut out = Vec::with_capacity(count.saturating_sub(1) as usize);
    let mut prefix = Complex64::new(0.0, 0.0);
    for (i, t) in ranking.iter().enumerate() {
        let p = phi.phase(t[0], t[1]);
        if i > 0 {
            let ell = i as u64;
            out.push((prefix - p * ell as f64) / (helmert_norm(ell) * norm).sqrt());
        }
        prefix += p;
    }
    Ok(out)
}
