//! Exact sparse linear systems over the rationals.
//!
//! Rows are reduced incrementally into echelon form. Every reduced row keeps
//! the combination of original rows that produced it, so an inconsistent
//! system yields a Farkas-style certificate `y` with `yᵀA = 0`, `yᵀb ≠ 0`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::poly::Q;

pub type SparseRow = BTreeMap<usize, Q>;

/// `A x = b` with `A` stored row-wise and sparse.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearSystem {
    ncols: usize,
    rows: Vec<SparseRow>,
    rhs: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    Feasible {
        particular: Vec<Q>,
        nullspace: Vec<Vec<Q>>,
    },
    /// Weights on the original rows: `yᵀA = 0` and `yᵀb ≠ 0`.
    Infeasible { certificate: SparseRow },
}

impl LinearSystem {
    pub fn new(ncols: usize) -> Self {
        LinearSystem {
            ncols,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Appends one equation; zero entries are dropped.
    pub fn push_row(&mut self, row: SparseRow, rhs: Q) {
        debug_assert!(row.keys().all(|&c| c < self.ncols));
        let row = row.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Builds a system from columns: `entries[c]` maps row keys to values,
    /// `rhs` maps row keys to right-hand sides. Row keys are sorted, so the
    /// resulting row order is deterministic.
    pub fn from_columns<K: Ord + Clone>(
        columns: &[BTreeMap<K, Q>],
        rhs: &BTreeMap<K, Q>,
    ) -> (Self, Vec<K>) {
        let mut rows: BTreeMap<K, SparseRow> = BTreeMap::new();
        for (c, col) in columns.iter().enumerate() {
            for (k, v) in col {
                if !v.is_zero() {
                    rows.entry(k.clone()).or_default().insert(c, v.clone());
                }
            }
        }
        for k in rhs.keys() {
            rows.entry(k.clone()).or_default();
        }
        let mut sys = LinearSystem::new(columns.len());
        let mut keys = Vec::with_capacity(rows.len());
        for (k, row) in rows {
            let b = rhs.get(&k).cloned().unwrap_or_else(Q::zero);
            sys.push_row(row, b);
            keys.push(k);
        }
        (sys, keys)
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.rows.iter().all(BTreeMap::is_empty)
    }

    pub fn solve(&self) -> Solution {
        // pivot column -> (row with leading entry 1 at that column, rhs, combination)
        let mut pivots: BTreeMap<usize, (SparseRow, Q, SparseRow)> = BTreeMap::new();
        for (r, (row, b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let mut row = row.clone();
            let mut b = b.clone();
            let mut combo: SparseRow = BTreeMap::from([(r, Q::one())]);
            let mut cursor = 0usize;
            loop {
                let next = row
                    .range(cursor..)
                    .map(|(&c, _)| c)
                    .find(|c| pivots.contains_key(c));
                let Some(c) = next else { break };
                let factor = row[&c].clone();
                let (prow, pb, pcombo) = &pivots[&c];
                axpy(&mut row, &-factor.clone(), prow);
                b -= &factor * pb;
                axpy(&mut combo, &-factor, pcombo);
                cursor = c + 1;
            }
            match row.iter().next().map(|(&c, v)| (c, v.clone())) {
                None => {
                    if !b.is_zero() {
                        return Solution::Infeasible { certificate: combo };
                    }
                }
                Some((lead, v)) => {
                    let inv = v.recip();
                    scale(&mut row, &inv);
                    scale(&mut combo, &inv);
                    pivots.insert(lead, (row, b * &inv, combo));
                }
            }
        }

        let back = |rhs_of: &dyn Fn(&Q) -> Q, fixed: &BTreeMap<usize, Q>| -> Vec<Q> {
            let mut x = vec![Q::zero(); self.ncols];
            for (&c, v) in fixed {
                x[c] = v.clone();
            }
            for (&c, (row, b, _)) in pivots.iter().rev() {
                let mut val = rhs_of(b);
                for (&j, a) in row.range(c + 1..) {
                    if !x[j].is_zero() {
                        val -= a * &x[j];
                    }
                }
                x[c] = val;
            }
            x
        };
        let particular = back(&|b| b.clone(), &BTreeMap::new());
        let nullspace = (0..self.ncols)
            .filter(|c| !pivots.contains_key(c))
            .map(|f| back(&|_| Q::zero(), &BTreeMap::from([(f, Q::one())])))
            .collect();
        Solution::Feasible {
            particular,
            nullspace,
        }
    }

    pub fn residual(&self, x: &[Q]) -> Vec<Q> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| row.iter().map(|(&c, a)| a * &x[c]).sum::<Q>() - b)
            .collect()
    }

    pub fn is_solution(&self, x: &[Q]) -> bool {
        x.len() == self.ncols && self.residual(x).iter().all(Zero::is_zero)
    }

    pub fn is_homogeneous_solution(&self, x: &[Q]) -> bool {
        x.len() == self.ncols
            && self
                .rows
                .iter()
                .all(|row| row.iter().map(|(&c, a)| a * &x[c]).sum::<Q>().is_zero())
    }

    /// Checks `yᵀA = 0` and `yᵀb ≠ 0` directly on the stored rows.
    pub fn verify_certificate(&self, y: &SparseRow) -> bool {
        let mut acc: SparseRow = BTreeMap::new();
        let mut yb = Q::zero();
        for (&r, w) in y {
            let Some(row) = self.rows.get(r) else {
                return false;
            };
            axpy(&mut acc, w, row);
            yb += w * &self.rhs[r];
        }
        acc.is_empty() && !yb.is_zero()
    }
}

/// Rank of a dense rational matrix.
pub fn dense_rank(rows: &[Vec<Q>]) -> usize {
    let mut sys = LinearSystem::new(rows.first().map_or(0, Vec::len));
    for r in rows {
        sys.push_row(r.iter().cloned().enumerate().collect(), Q::zero());
    }
    match sys.solve() {
        Solution::Feasible { nullspace, .. } => sys.ncols - nullspace.len(),
        Solution::Infeasible { .. } => unreachable!("homogeneous systems are consistent"),
    }
}

fn axpy(target: &mut SparseRow, k: &Q, src: &SparseRow) {
    for (&c, v) in src {
        let e = target.entry(c).or_insert_with(Q::zero);
        *e += k * v;
        if e.is_zero() {
            target.remove(&c);
        }
    }
}

fn scale(row: &mut SparseRow, k: &Q) {
    for v in row.values_mut() {
        *v *= k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{q, qf};
    use proptest::prelude::*;

    fn row(entries: &[(usize, i64)]) -> SparseRow {
        entries.iter().map(|&(c, v)| (c, q(v))).collect()
    }

    #[test]
    fn unique_solution() {
        let mut s = LinearSystem::new(2);
        s.push_row(row(&[(0, 1), (1, 1)]), q(3));
        s.push_row(row(&[(0, 1), (1, -1)]), q(1));
        match s.solve() {
            Solution::Feasible {
                particular,
                nullspace,
            } => {
                assert_eq!(particular, vec![q(2), q(1)]);
                assert!(nullspace.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn underdetermined_has_nullspace() {
        let mut s = LinearSystem::new(3);
        s.push_row(row(&[(0, 2), (2, 1)]), q(1));
        let Solution::Feasible {
            particular,
            nullspace,
        } = s.solve()
        else {
            panic!()
        };
        assert!(s.is_solution(&particular));
        assert_eq!(particular[0], qf(1, 2));
        assert_eq!(nullspace.len(), 2);
        assert!(nullspace.iter().all(|v| s.is_homogeneous_solution(v)));
    }

    #[test]
    fn inconsistent_gives_certificate() {
        let mut s = LinearSystem::new(2);
        s.push_row(row(&[(0, 1), (1, 1)]), q(1));
        s.push_row(row(&[(0, 2), (1, 2)]), q(3));
        let Solution::Infeasible { certificate } = s.solve() else {
            panic!()
        };
        assert!(s.verify_certificate(&certificate));
        assert!(!s.verify_certificate(&row(&[(0, 1)])));
    }

    #[test]
    fn zero_matrix_with_nonzero_rhs() {
        let (s, keys) = LinearSystem::from_columns::<u8>(
            &[BTreeMap::new()],
            &BTreeMap::from([(7u8, q(2))]),
        );
        assert!(s.is_zero_matrix());
        assert_eq!(keys, vec![7]);
        let Solution::Infeasible { certificate } = s.solve() else {
            panic!()
        };
        assert!(s.verify_certificate(&certificate));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(dense_rank(&[vec![q(1), q(2)], vec![q(2), q(4)]]), 1);
        assert_eq!(dense_rank(&[vec![q(1), q(0)], vec![q(0), q(3)]]), 2);
        assert_eq!(dense_rank(&[vec![q(0), q(0)]]), 0);
    }

    proptest! {
        #[test]
        fn solve_is_sound(
            entries in proptest::collection::vec(
                proptest::collection::vec(-3i64..=3, 4), 1..6),
            xs in proptest::collection::vec(-4i64..=4, 4),
            consistent in any::<bool>(),
            bump in 1i64..5,
        ) {
            let mut s = LinearSystem::new(4);
            for (r, e) in entries.iter().enumerate() {
                let rr: SparseRow = e.iter().enumerate().map(|(c, &v)| (c, q(v))).collect();
                let mut b: Q = e.iter().zip(&xs).map(|(a, x)| q(a * x)).sum();
                if !consistent && r == 0 {
                    b += q(bump);
                }
                s.push_row(rr, b);
            }
            match s.solve() {
                Solution::Feasible { particular, nullspace } => {
                    prop_assert!(s.is_solution(&particular));
                    for v in &nullspace {
                        prop_assert!(s.is_homogeneous_solution(v));
                    }
                }
                Solution::Infeasible { certificate } => {
                    prop_assert!(!consistent);
                    prop_assert!(s.verify_certificate(&certificate));
                }
            }
        }
    }
}
