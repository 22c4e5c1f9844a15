//! Colexicographic ranking of strictly increasing atom tuples.
//!
//! Ranks are 1-based (`1..=binom(N, n)`), matching the basis labels; atom
//! indices inside a tuple are 0-based. For `n = 1` rank `γ` is atom `γ - 1`.

use crate::numeric::binomial;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleRanking {
    atoms: usize,
    order: usize,
    count: u64,
}

impl TupleRanking {
    pub fn new(atoms: usize, order: usize) -> Result<Self> {
        if order > atoms {
            return Err(Error::invalid(format!("excitation number {order} exceeds atom number {atoms}")));
        }
        let count = binomial(atoms as u64, order as u64)
            .ok_or_else(|| Error::TooLarge(format!("binom({atoms}, {order}) overflows u64")))?;
        Ok(Self { atoms, order, count })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of tuples, `binom(N, n)`.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn rank(&self, tuple: &[usize]) -> Result<u64> {
        if tuple.len() != self.order {
            return Err(Error::invalid(format!("tuple length {} != {}", tuple.len(), self.order)));
        }
        if tuple.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("tuple must be strictly increasing"));
        }
        if tuple.last().is_some_and(|&a| a >= self.atoms) {
            return Err(Error::OutOfRange(format!("atom index >= {}", self.atoms)));
        }
        let r: u64 = tuple
            .iter()
            .enumerate()
            .map(|(i, &c)| binomial(c as u64, i as u64 + 1).unwrap_or(0))
            .sum();
        Ok(r + 1)
    }

    pub fn unrank(&self, rank: u64) -> Result<Vec<usize>> {
        if rank == 0 || rank > self.count {
            return Err(Error::OutOfRange(format!("rank {rank} outside 1..={}", self.count)));
        }
        let mut r = rank - 1;
        let mut tuple = vec![0; self.order];
        let mut upper = self.atoms;
        for i in (1..=self.order).rev() {
            // largest c < upper with binom(c, i) <= r
            let mut c = upper - 1;
            while binomial(c as u64, i as u64).unwrap_or(u64::MAX) > r {
                c -= 1;
            }
            r -= binomial(c as u64, i as u64).unwrap_or(0);
            tuple[i - 1] = c;
            upper = c;
        }
        Ok(tuple)
    }

    /// Tuples in rank order.
    pub fn iter(&self) -> ColexIter {
        ColexIter {
            atoms: self.atoms,
            current: if self.order <= self.atoms { Some((0..self.order).collect()) } else { None },
        }
    }
}

pub struct ColexIter {
    atoms: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for ColexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        let n = next.len();
        let mut advanced = false;
        for i in 0..n {
            let limit = if i + 1 < n { next[i + 1] } else { self.atoms };
            if next[i] + 1 < limit {
                next[i] += 1;
                for (j, slot) in next.iter_mut().enumerate().take(i) {
                    *slot = j;
                }
                advanced = true;
                break;
            }
        }
        if advanced {
            self.current = Some(next);
        }
        Some(out)
    }
}

/// 1-based colex rank of a strictly increasing tuple drawn from `atoms` atoms.
pub fn rank_tuple(tuple: &[usize], atoms: usize) -> Result<u64> {
    TupleRanking::new(atoms, tuple.len())?.rank(tuple)
}

pub fn unrank_tuple(rank: u64, order: usize, atoms: usize) -> Result<Vec<usize>> {
    TupleRanking::new(atoms, order)?.unrank(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_atoms_pairs_in_colex_order() {
        let r = TupleRanking::new(3, 2).unwrap();
        assert_eq!(r.unrank(1).unwrap(), vec![0, 1]);
        assert_eq!(r.unrank(2).unwrap(), vec![0, 2]);
        assert_eq!(r.unrank(3).unwrap(), vec![1, 2]);
        assert!(r.unrank(4).is_err());
        assert!(r.unrank(0).is_err());
    }

    #[test]
    fn last_rank_is_top_tuple() {
        // Enumeration oracle: the last tuple of all 4-subsets of 10 atoms.
        let all: Vec<Vec<usize>> = TupleRanking::new(10, 4).unwrap().iter().collect();
        assert_eq!(all.len(), 210);
        assert_eq!(all.last().unwrap(), &vec![6, 7, 8, 9]);
        assert_eq!(unrank_tuple(210, 4, 10).unwrap(), vec![6, 7, 8, 9]);
    }

    #[test]
    fn iterator_agrees_with_unrank_for_n8_k3() {
        let r = TupleRanking::new(8, 3).unwrap();
        for (i, t) in r.iter().enumerate() {
            assert_eq!(r.unrank(i as u64 + 1).unwrap(), t);
            assert_eq!(r.rank(&t).unwrap(), i as u64 + 1);
        }
        assert_eq!(r.iter().count() as u64, r.count());
    }

    #[test]
    fn bad_tuples_rejected() {
        let r = TupleRanking::new(5, 2).unwrap();
        assert!(r.rank(&[2, 1]).is_err());
        assert!(r.rank(&[1, 5]).is_err());
        assert!(r.rank(&[1]).is_err());
        assert!(TupleRanking::new(2, 3).is_err());
    }

    proptest! {
        #[test]
        fn rank_unrank_bijection(atoms in 1usize..40, order in 1usize..5, seed in any::<u64>()) {
            prop_assume!(order <= atoms);
            let r = TupleRanking::new(atoms, order).unwrap();
            let rank = seed % r.count() + 1;
            let t = r.unrank(rank).unwrap();
            prop_assert!(t.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(r.rank(&t).unwrap(), rank);
        }
    }
}
