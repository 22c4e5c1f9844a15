//! Timed-Dicke bases and their radiative coupling functions.
//!
//! Basis states for `n` excitations are labelled by `ell`: `0` is the
//! symmetric timed-Dicke state, `1..binom(N, n)` are the Helmert-type
//! non-symmetric states built over colex-ranked tuples with normalisation
//! `L = ell (ell + 1)`.
//!
//! Closed forms are provided for every element that involves at least one
//! symmetric state. [`oracle`] builds the basis vectors explicitly and
//! contracts the defining sums for small systems.

pub mod oracle;
pub mod ranking;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::ensemble::{AtomicEnsemble, WaveVector};
use crate::numeric::{binomial, phase_sum};
use crate::{Error, Result};

pub use oracle::{gram_matrix, oracle_coupling_matrix, oracle_matrix_element, DickeBasis};
pub use ranking::{rank_tuple, unrank_tuple, TupleRanking};

/// Complex, dimensionless matrix element between timed-Dicke states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingValue(pub Complex64);

impl CouplingValue {
    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// `k - k'_0` or its negative, in units of `k_eg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaK(pub Vector3<f64>);

impl DeltaK {
    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }
}

/// Basis label: excitation number and state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DickeIndex {
    pub n: usize,
    pub ell: u64,
}

impl DickeIndex {
    pub fn validate(&self, atoms: usize) -> Result<()> {
        let count = TupleRanking::new(atoms, self.n)?.count();
        if self.ell >= count {
            return Err(Error::OutOfRange(format!("ell = {} >= binom({atoms}, {}) = {count}", self.ell, self.n)));
        }
        Ok(())
    }
}

/// Helmert normalisation `ell (ell + 1)`.
pub(crate) fn helmert_norm(ell: u64) -> f64 {
    let l = ell as f64;
    l * (l + 1.0)
}

/// An ensemble together with its phase-matched wave vector `k'_0 = k_0 - k_L`.
#[derive(Debug, Clone, Copy)]
pub struct TimedDicke<'a> {
    ensemble: &'a AtomicEnsemble,
    k0p: WaveVector,
}

impl<'a> TimedDicke<'a> {
    pub fn new(ensemble: &'a AtomicEnsemble, k0p: WaveVector) -> Self {
        Self { ensemble, k0p }
    }

    pub fn ensemble(&self) -> &'a AtomicEnsemble {
        self.ensemble
    }

    pub fn k0p(&self) -> &WaveVector {
        &self.k0p
    }

    pub fn atoms(&self) -> usize {
        self.ensemble.len()
    }

    fn binom(&self, n: usize) -> Result<f64> {
        binomial(self.atoms() as u64, n as u64)
            .map(|b| b as f64)
            .ok_or_else(|| Error::TooLarge(format!("binom({}, {n})", self.atoms())))
    }

    /// `k - k'_0`.
    pub fn detuned(&self, k: &WaveVector) -> DeltaK {
        DeltaK(k.0 - self.k0p.0)
    }

    /// `Σ_μ exp(i (k - k'_0)·r_μ)`.
    pub fn structure_factor(&self, k: &WaveVector) -> Complex64 {
        phase_sum(self.ensemble.positions(), &self.detuned(k).0)
    }

    fn tuple_phase(&self, tuple: &[usize], dk: &DeltaK) -> Complex64 {
        let r = self.ensemble.positions();
        tuple.iter().map(|&a| Complex64::cis(dk.0.dot(&r[a]))).sum()
    }

    /// `S^ℓ_{j[n]}(dk) = Σ_s [exp(i dk·r_{j(s)}) - exp(i dk·r_{ℓ+1(s)})]`.
    pub fn s_function(&self, n: usize, ell: u64, j: u64, dk: &DeltaK) -> Result<CouplingValue> {
        if ell == 0 {
            return Err(Error::invalid("the symmetric state (ell = 0) has no S function"));
        }
        if j == 0 || j > ell {
            return Err(Error::OutOfRange(format!("j = {j} outside 1..={ell}")));
        }
        let ranking = TupleRanking::new(self.atoms(), n)?;
        let tj = ranking.unrank(j)?;
        let tl = ranking.unrank(ell + 1)?;
        Ok(CouplingValue(self.tuple_phase(&tj, dk) - self.tuple_phase(&tl, dk)))
    }

    /// `Σ_{j=1}^{ℓ} S^ℓ_{j[n]}(dk)`.
    pub fn s_sum(&self, n: usize, ell: u64, dk: &DeltaK) -> Result<Complex64> {
        if ell == 0 {
            return Err(Error::invalid("the symmetric state (ell = 0) has no S function"));
        }
        let ranking = TupleRanking::new(self.atoms(), n)?;
        if ell + 1 > ranking.count() {
            return Err(Error::OutOfRange(format!("ell = {ell} >= binom = {}", ranking.count())));
        }
        let mut prefix = Complex64::new(0.0, 0.0);
        let mut last = Complex64::new(0.0, 0.0);
        for (idx, t) in ranking.iter().take(ell as usize + 1).enumerate() {
            let w = self.tuple_phase(&t, dk);
            if (idx as u64) < ell {
                prefix += w;
            } else {
                last = w;
            }
        }
        Ok(prefix - last * ell as f64)
    }

    /// Same-number coupling `V^[n,n]_{ℓℓ'}(k)` for `(0,0)`, `(0,ℓ)` and `(ℓ,0)`,
    /// and for every pair when `n = 1`.
    ///
    /// `(0,0)` uses the factorized leading-order form
    /// `(n/N) |Σ_μ exp(i(k - k'_0)·r_μ)|²`; exact for `n = 1`. With a single
    /// excitation the only intermediate state is the ground state, so
    /// `V^[1,1]_{ℓℓ'} = V_{ℓG} conj(V_{ℓ'G})`.
    pub fn v_nn(&self, n: usize, ell: u64, ell_prime: u64, k: &WaveVector) -> Result<CouplingValue> {
        self.check_order(n)?;
        match (ell, ell_prime) {
            (a, b) if n == 1 && a > 0 && b > 0 => {
                Ok(CouplingValue(self.v_ground(a, k)?.0 * self.v_ground(b, k)?.0.conj()))
            }
            (0, 0) => {
                let s = self.structure_factor(k);
                Ok(CouplingValue(Complex64::new(n as f64 / self.atoms() as f64 * s.norm_sqr(), 0.0)))
            }
            (0, l) => {
                let s = self.structure_factor(k);
                let minus = DeltaK(self.k0p.0 - k.0);
                let sum = self.s_sum(n, l, &minus)?;
                Ok(CouplingValue(s * sum / (self.binom(n)? * helmert_norm(l)).sqrt()))
            }
            (l, 0) => Ok(CouplingValue(self.v_nn(n, 0, l, k)?.0.conj())),
            _ => Err(non_symmetric_pair()),
        }
    }

    /// Literal double sum `(n/N) Σ_{μ,ν} exp(i(k - k'_0)·(r_μ - r_ν))`, the
    /// O(N²) self-check for the factorized `(0,0)` element.
    pub fn v_nn_double_sum(&self, n: usize, k: &WaveVector) -> Result<CouplingValue> {
        self.check_order(n)?;
        let q = self.detuned(k).0;
        let r = self.ensemble.positions();
        let total = crate::numeric::par_sum(r.len(), |mu| {
            let row: Vec<Complex64> = r.iter().map(|rn| Complex64::cis(q.dot(&(r[mu] - rn)))).collect();
            crate::numeric::tree_sum(&row)
        });
        Ok(CouplingValue(total * (n as f64 / self.atoms() as f64)))
    }

    /// Lowering coupling `V^[n-1,n]_{ℓℓ'}(k)` for `(0,0)`, `(0,ℓ)` and `(ℓ,0)`.
    /// All three forms are exact.
    pub fn v_down(&self, n: usize, ell: u64, ell_prime: u64, k: &WaveVector) -> Result<CouplingValue> {
        if n < 2 {
            return Err(Error::invalid("v_down needs n >= 2; use v_ground for the single-excitation case"));
        }
        self.check_order(n)?;
        let big_n = self.atoms() as f64;
        let minus = DeltaK(self.k0p.0 - k.0);
        match (ell, ell_prime) {
            (0, 0) => {
                let s = phase_sum(self.ensemble.positions(), &minus.0);
                let nf = n as f64;
                Ok(CouplingValue(s * ((nf * (big_n - nf + 1.0)).sqrt() / big_n)))
            }
            (0, l) => {
                let sum = self.s_sum(n, l, &minus)?;
                Ok(CouplingValue(sum / (self.binom(n - 1)? * helmert_norm(l)).sqrt()))
            }
            (l, 0) => {
                let sum = self.s_sum(n - 1, l, &minus)?;
                Ok(CouplingValue(-sum / (self.binom(n)? * helmert_norm(l)).sqrt()))
            }
            _ => Err(non_symmetric_pair()),
        }
    }

    /// Ground-state coupling `V_{ℓG}(k) = Σ_μ exp(i k·r_μ) <E_ℓ|σ⁺_μ|G>`.
    pub fn v_ground(&self, ell: u64, k: &WaveVector) -> Result<CouplingValue> {
        let n = self.atoms() as u64;
        if ell >= n {
            return Err(Error::OutOfRange(format!("ell = {ell} >= N = {n}")));
        }
        if ell == 0 {
            return Ok(CouplingValue(self.structure_factor(k) / (n as f64).sqrt()));
        }
        let sum = self.s_sum(1, ell, &self.detuned(k))?;
        Ok(CouplingValue(sum / helmert_norm(ell).sqrt()))
    }

    fn check_order(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.atoms() {
            return Err(Error::invalid(format!("excitation number {n} outside 1..={}", self.atoms())));
        }
        Ok(())
    }
}

fn non_symmetric_pair() -> Error {
    Error::invalid("couplings between two non-symmetric states are only available from the oracle")
}
