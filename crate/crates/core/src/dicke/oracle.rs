//! Explicit product-basis construction of timed-Dicke states.
//!
//! States with `n` excitations live in the span of the `binom(N, n)` tuples
//! `|γ⟩`, indexed by colex rank. Matrix elements are obtained by applying
//! the phased lowering operator `A(k) = Σ_ν exp(-i k·r_ν) σ_ν` and taking
//! inner products, with no approximation. Only meant for small systems.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{helmert_norm, CouplingValue, TimedDicke, TupleRanking};
use crate::ensemble::WaveVector;
use crate::{Error, Result};

pub const MAX_ATOMS: usize = 14;
pub const MAX_EXCITATIONS: usize = 3;

/// The `n`-excitation timed-Dicke basis of an ensemble in explicit form.
#[derive(Debug, Clone)]
pub struct DickeBasis<'a> {
    system: TimedDicke<'a>,
    ranking: TupleRanking,
    /// `exp(i k'_0·Σ_s r_{γ(s)})` per tuple, in rank order.
    phases: Vec<Complex64>,
}

impl<'a> DickeBasis<'a> {
    pub fn new(system: TimedDicke<'a>, n: usize) -> Result<Self> {
        let atoms = system.atoms();
        if atoms > MAX_ATOMS || n > MAX_EXCITATIONS {
            return Err(Error::TooLarge(format!(
                "explicit basis limited to N <= {MAX_ATOMS}, n <= {MAX_EXCITATIONS} (got N = {atoms}, n = {n})"
            )));
        }
        let ranking = TupleRanking::new(atoms, n)?;
        let r = system.ensemble().positions();
        let k0 = system.k0p().0;
        let phases = ranking
            .iter()
            .map(|t| Complex64::cis(t.iter().map(|&a| k0.dot(&r[a])).sum()))
            .collect();
        Ok(Self { system, ranking, phases })
    }

    pub fn order(&self) -> usize {
        self.ranking.order()
    }

    pub fn dim(&self) -> usize {
        self.ranking.count() as usize
    }

    /// Amplitudes of `|E_ℓ[n]⟩` over the tuple basis (index = rank - 1).
    pub fn vector(&self, ell: u64) -> Result<Vec<Complex64>> {
        let dim = self.dim();
        if ell as usize >= dim {
            return Err(Error::OutOfRange(format!("ell = {ell} >= {dim}")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        if ell == 0 {
            let a = 1.0 / (dim as f64).sqrt();
            for (slot, p) in v.iter_mut().zip(&self.phases) {
                *slot = p * a;
            }
        } else {
            let a = 1.0 / helmert_norm(ell).sqrt();
            let l = ell as usize;
            for g in 0..l {
                v[g] = self.phases[g] * a;
            }
            v[l] = -self.phases[l] * (ell as f64 * a);
        }
        Ok(v)
    }

    /// `A(k)|v⟩` expressed in the `(n-1)`-excitation tuple basis.
    pub fn lower(&self, v: &[Complex64], k: &WaveVector) -> Result<Vec<Complex64>> {
        let n = self.order();
        if n == 0 {
            return Err(Error::invalid("cannot lower the ground state"));
        }
        let below = TupleRanking::new(self.ranking.atoms(), n - 1)?;
        let r = self.system.ensemble().positions();
        let mut out = vec![Complex64::new(0.0, 0.0); below.count() as usize];
        for (t, amp) in self.ranking.iter().zip(v) {
            if *amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            for s in 0..n {
                let mut rest = t.clone();
                let a = rest.remove(s);
                let idx = below.rank(&rest)? as usize - 1;
                out[idx] += amp * Complex64::cis(-k.0.dot(&r[a]));
            }
        }
        Ok(out)
    }
}

fn inner(bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
    bra.iter().zip(ket).map(|(b, k)| b.conj() * k).sum()
}

/// Literal evaluation of a coupling between timed-Dicke states.
///
/// For `n_bra == n_ket` this is `Σ_{μν} exp(ik·(r_μ - r_ν)) ⟨bra|σ⁺_μ σ_ν|ket⟩`,
/// for `n_bra == n_ket - 1` it is `Σ_μ exp(-ik·r_μ) ⟨bra|σ_μ|ket⟩`
/// (`n_bra = 0` is the ground state).
pub fn oracle_matrix_element(
    system: &TimedDicke<'_>,
    n_bra: usize,
    n_ket: usize,
    ell_bra: u64,
    ell_ket: u64,
    k: &WaveVector,
) -> Result<CouplingValue> {
    if n_ket == 0 || n_ket > system.atoms() {
        return Err(Error::invalid(format!("n_ket = {n_ket} outside 1..={}", system.atoms())));
    }
    let ket_basis = DickeBasis::new(*system, n_ket)?;
    let lowered_ket = ket_basis.lower(&ket_basis.vector(ell_ket)?, k)?;
    if n_bra == n_ket {
        let lowered_bra = ket_basis.lower(&ket_basis.vector(ell_bra)?, k)?;
        Ok(CouplingValue(inner(&lowered_bra, &lowered_ket)))
    } else if n_bra + 1 == n_ket {
        let bra = if n_bra == 0 {
            if ell_bra != 0 {
                return Err(Error::OutOfRange("the ground state has only ell = 0".into()));
            }
            vec![Complex64::new(1.0, 0.0)]
        } else {
            DickeBasis::new(*system, n_bra)?.vector(ell_bra)?
        };
        Ok(CouplingValue(inner(&bra, &lowered_ket)))
    } else {
        Err(Error::invalid(format!("n_bra must be n_ket or n_ket - 1 (got {n_bra}, {n_ket})")))
    }
}

/// Full same-number coupling matrix `M_{ℓℓ'}(k)` from the explicit basis.
pub fn oracle_coupling_matrix(system: &TimedDicke<'_>, n: usize, k: &WaveVector) -> Result<DMatrix<Complex64>> {
    let basis = DickeBasis::new(*system, n)?;
    let dim = basis.dim();
    let lowered = (0..dim as u64)
        .map(|l| basis.lower(&basis.vector(l)?, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(dim, dim, |i, j| inner(&lowered[i], &lowered[j])))
}

/// Gram matrix of the explicit basis vectors.
pub fn gram_matrix(basis: &DickeBasis<'_>) -> Result<DMatrix<Complex64>> {
    let dim = basis.dim();
    let vs = (0..dim as u64).map(|l| basis.vector(l)).collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(dim, dim, |i, j| inner(&vs[i], &vs[j])))
}
