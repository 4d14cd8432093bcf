//! Polyvector fields, the Schouten–Nijenhuis bracket, the HKR map and the
//! relative Poisson complex `A ⊗ ∧*Rⁿ`.
//!
//! A degree-`k` polyvector is stored as a map from strictly increasing index
//! tuples `(i_1 < … < i_k)` to polynomial coefficients, i.e. as
//! `Σ P^I ∂_{i_1}∧…∧∂_{i_k}`.
//!
//! Bracket convention: the Schouten bracket is the Lie bracket on vector
//! fields, `[X, f] = X(f)`, `[X∧Y, f] = X(f)Y − Y(f)X`, extended by
//! `[X∧Y, Z] = X∧[Y,Z] + [X,Z]∧Y`. With this convention `d_π f = [π, f]` is
//! the Hamiltonian vector field `g ↦ {f, g}`. It is graded antisymmetric,
//! `[P,Q] = −(−1)^{(p−1)(q−1)}[Q,P]`, and satisfies the graded Jacobi identity
//! in the shifted degrees `p−1`.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_traits::One;

use crate::error::{same_dim, Error, Result};
use crate::obstruction::IntegrableSystem;
use crate::poly::{default_names, q, Exponents, Polynomial, Q};
use crate::polydiff::PolyDiffOp;

/// Sorts an index tuple, returning the permutation sign (`true` = odd) or
/// `None` when an index repeats.
pub(crate) fn canonical_indices(idx: &[usize]) -> Option<(bool, Vec<usize>)> {
    let mut v = idx.to_vec();
    let mut odd = false;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            odd = !odd;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((odd, v))
}

/// `θ_A θ_B` for increasing `A`, `B`: sign parity and merged tuple.
pub(crate) fn merge_indices(a: &[usize], b: &[usize]) -> Option<(bool, Vec<usize>)> {
    let mut inversions = 0usize;
    for &x in a {
        for &y in b {
            if x == y {
                return None;
            }
            if x > y {
                inversions += 1;
            }
        }
    }
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    Some((inversions % 2 == 1, v))
}

fn signed(p: Polynomial, odd: bool) -> Polynomial {
    if odd {
        -p
    } else {
        p
    }
}

/// Antisymmetric polynomial-coefficient polyvector field.
#[derive(Clone, PartialEq, Eq)]
pub struct Polyvector {
    dim: usize,
    degree: usize,
    comps: BTreeMap<Vec<usize>, Polynomial>,
}

impl Polyvector {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Polyvector {
            dim,
            degree,
            comps: BTreeMap::new(),
        }
    }

    /// A function viewed as a degree-0 polyvector.
    pub fn function(f: Polynomial) -> Self {
        let mut pv = Polyvector::zero(f.dim(), 0);
        pv.add_component(vec![], f);
        pv
    }

    /// Builds a polyvector from arbitrary (not necessarily sorted) index
    /// tuples; repeated indices vanish and reordering contributes its sign.
    pub fn from_components(
        dim: usize,
        degree: usize,
        comps: impl IntoIterator<Item = (Vec<usize>, Polynomial)>,
    ) -> Result<Self> {
        let mut pv = Polyvector::zero(dim, degree);
        for (idx, c) in comps {
            same_dim(dim, c.dim())?;
            if idx.len() != degree {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: idx.len(),
                });
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= dim) {
                return Err(Error::IndexOutOfRange { index: bad, dim });
            }
            if let Some((odd, sorted)) = canonical_indices(&idx) {
                pv.add_component(sorted, signed(c, odd));
            }
        }
        Ok(pv)
    }

    /// `∂_{i_1}∧…∧∂_{i_k}` with unit coefficient.
    pub fn basis(dim: usize, idx: &[usize]) -> Result<Self> {
        Self::from_components(dim, idx.len(), [(idx.to_vec(), Polynomial::one(dim))])
    }

    /// `Σ X^i ∂_i`.
    pub fn vector_field(comps: Vec<Polynomial>) -> Self {
        let dim = comps.len();
        let mut pv = Polyvector::zero(dim, 1);
        for (i, c) in comps.into_iter().enumerate() {
            assert_eq!(c.dim(), dim);
            pv.add_component(vec![i], c);
        }
        pv
    }

    /// `Σ π^{ij} ∂_i∧∂_j` from `(i, j, π^{ij})` entries.
    pub fn bivector(dim: usize, entries: &[(usize, usize, Polynomial)]) -> Result<Self> {
        Self::from_components(
            dim,
            2,
            entries.iter().map(|(i, j, c)| (vec![*i, *j], c.clone())),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &Polynomial)> {
        self.comps.iter()
    }

    /// Coefficient of `∂_{idx}` for an arbitrary-order tuple.
    pub fn component(&self, idx: &[usize]) -> Polynomial {
        match canonical_indices(idx) {
            Some((odd, sorted)) => signed(
                self.comps
                    .get(&sorted)
                    .cloned()
                    .unwrap_or_else(|| Polynomial::zero(self.dim)),
                odd,
            ),
            None => Polynomial::zero(self.dim),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    fn add_component(&mut self, idx: Vec<usize>, c: Polynomial) {
        if c.is_zero() {
            return;
        }
        let slot = self
            .comps
            .entry(idx)
            .or_insert_with(|| Polynomial::zero(c.dim()));
        *slot += &c;
        if slot.is_zero() {
            self.comps.retain(|_, v| !v.is_zero());
        }
    }

    pub fn checked_add(&self, other: &Polyvector) -> Result<Polyvector> {
        same_dim(self.dim, other.dim)?;
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        let mut out = if self.is_zero() {
            Polyvector::zero(self.dim, other.degree)
        } else {
            self.clone()
        };
        if self.is_zero() {
            out.comps = other.comps.clone();
            return Ok(out);
        }
        for (i, c) in &other.comps {
            out.add_component(i.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Polyvector {
        Polyvector {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(|(i, c)| (i.clone(), -c)).collect(),
        }
    }

    pub fn checked_sub(&self, other: &Polyvector) -> Result<Polyvector> {
        self.checked_add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> Polyvector {
        let mut out = Polyvector::zero(self.dim, self.degree);
        for (i, p) in &self.comps {
            out.add_component(i.clone(), p.scale(c));
        }
        out
    }

    /// Multiplies every component by a function.
    pub fn mul_function(&self, f: &Polynomial) -> Polyvector {
        let mut out = Polyvector::zero(self.dim, self.degree);
        for (i, p) in &self.comps {
            out.add_component(i.clone(), p * f);
        }
        out
    }

    /// Applies a vector field to a function: `X(f) = Σ X^i ∂_i f`.
    pub fn apply_vector(&self, f: &Polynomial) -> Result<Polynomial> {
        if self.degree != 1 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                found: self.degree,
            });
        }
        same_dim(self.dim, f.dim())?;
        let mut acc = Polynomial::zero(self.dim);
        for (i, c) in &self.comps {
            acc += &(c * &f.d(i[0]));
        }
        Ok(acc)
    }

    /// Exterior product; graded commutative, `P∧Q = (−1)^{pq} Q∧P`.
    pub fn wedge(&self, other: &Polyvector) -> Result<Polyvector> {
        same_dim(self.dim, other.dim)?;
        let mut out = Polyvector::zero(self.dim, self.degree + other.degree);
        for (a, pa) in &self.comps {
            for (b, pb) in &other.comps {
                if let Some((odd, idx)) = merge_indices(a, b) {
                    out.add_component(idx, signed(pa * pb, odd));
                }
            }
        }
        Ok(out)
    }

    /// Schouten–Nijenhuis bracket, degree `p + q − 1` (see module docs).
    pub fn schouten(&self, other: &Polyvector) -> Result<Polyvector> {
        same_dim(self.dim, other.dim)?;
        let (p, qd) = (self.degree, other.degree);
        if p + qd == 0 {
            return Ok(Polyvector::zero(self.dim, 0));
        }
        // Odd-coordinate formula Σ_i (P ∂⃖/∂θ_i)(∂_i Q) − (∂_i P)(∂⃗/∂θ_i Q),
        // then twisted by (−1)^{(p−1)(q−1)} to land on the convention above.
        let mut out = Polyvector::zero(self.dim, p + qd - 1);
        for (a, pa) in &self.comps {
            for (b, qb) in &other.comps {
                for (k, &i) in a.iter().enumerate() {
                    let mut rest = a.clone();
                    rest.remove(k);
                    let right_odd = (p - 1 - k) % 2 == 1;
                    if let Some((odd, idx)) = merge_indices(&rest, b) {
                        out.add_component(idx, signed(pa * &qb.d(i), right_odd ^ odd));
                    }
                }
                for (k, &i) in b.iter().enumerate() {
                    let mut rest = b.clone();
                    rest.remove(k);
                    let left_odd = k % 2 == 1;
                    if let Some((odd, idx)) = merge_indices(a, &rest) {
                        out.add_component(idx, signed(&pa.d(i) * qb, !(left_odd ^ odd)));
                    }
                }
            }
        }
        // (p−1)(q−1) is odd exactly when p and q are both even
        let twist = p % 2 == 0 && qd % 2 == 0;
        Ok(if twist { out.neg() } else { out })
    }

    pub fn to_string_with(&self, names: &[String]) -> String {
        if self.comps.is_empty() {
            return "0".into();
        }
        self.comps
            .iter()
            .map(|(idx, c)| {
                let basis = idx.iter().map(|&i| format!("d_{}", names[i])).join("^");
                if idx.is_empty() {
                    format!("({})", c.to_string_with(names))
                } else {
                    format!("({})*{}", c.to_string_with(names), basis)
                }
            })
            .join(" + ")
    }
}

impl fmt::Debug for Polyvector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Polyvector[deg {}]({})",
            self.degree,
            self.to_string_with(&default_names(self.dim))
        )
    }
}

/// Outcome of [`jacobi_check`]: the witness is the trivector `[π, π]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiCheck {
    pub is_poisson: bool,
    pub witness: Polyvector,
}

pub fn jacobi_check(pi: &Polyvector) -> Result<JacobiCheck> {
    expect_bivector(pi)?;
    let witness = pi.schouten(pi)?;
    Ok(JacobiCheck {
        is_poisson: witness.is_zero(),
        witness,
    })
}

fn expect_bivector(pi: &Polyvector) -> Result<()> {
    if pi.degree() != 2 {
        return Err(Error::DegreeMismatch {
            expected: 2,
            found: pi.degree(),
        });
    }
    Ok(())
}

/// `{f, g} = Σ_{i<j} π^{ij}(∂_i f ∂_j g − ∂_j f ∂_i g)`.
pub fn poisson_bracket(pi: &Polyvector, f: &Polynomial, g: &Polynomial) -> Result<Polynomial> {
    expect_bivector(pi)?;
    same_dim(pi.dim(), f.dim())?;
    same_dim(pi.dim(), g.dim())?;
    let mut acc = Polynomial::zero(pi.dim());
    for (idx, c) in pi.components() {
        let (i, j) = (idx[0], idx[1]);
        let t = &(&f.d(i) * &g.d(j)) - &(&f.d(j) * &g.d(i));
        acc += &(c * &t);
    }
    Ok(acc)
}

/// Hamiltonian vector field `[π, f]`, i.e. `g ↦ {f, g}`.
pub fn hamiltonian_field(pi: &Polyvector, f: &Polynomial) -> Result<Polyvector> {
    expect_bivector(pi)?;
    pi.schouten(&Polyvector::function(f.clone()))
}

/// Poisson differential `d_π T = [π, T]`; refuses a non-Poisson `π`.
pub fn d_pi(pi: &Polyvector, t: &Polyvector) -> Result<Polyvector> {
    let check = jacobi_check(pi)?;
    if !check.is_poisson {
        return Err(Error::NotPoisson(
            check.witness.to_string_with(&default_names(pi.dim())),
        ));
    }
    pi.schouten(t)
}

/// Hochschild–Kostant–Rosenberg map with the `1/k!` normalization:
/// `χ(X_1∧…∧X_k)(g_1..g_k) = (1/k!) Σ_σ sgn(σ) X_1(g_{σ1})…X_k(g_{σk})`.
pub fn hkr_to_cochain(pv: &Polyvector) -> PolyDiffOp {
    let k = pv.degree();
    let m = pv.dim();
    let norm = (1..=k as i64).fold(Q::one(), |acc, n| acc * q(n)).recip();
    let mut terms = Vec::new();
    for (idx, c) in pv.components() {
        for perm in (0..k).permutations(k) {
            let odd = canonical_indices(&perm).map(|(o, _)| o).unwrap_or(false);
            let mut slots = vec![Exponents::zeros(m); k];
            for (j, &s) in perm.iter().enumerate() {
                slots[s] = Exponents::unit(m, idx[j]);
            }
            let coeff = c.scale(&if odd { -norm.clone() } else { norm.clone() });
            terms.push((coeff, slots));
        }
    }
    PolyDiffOp::from_terms(m, k, terms).expect("HKR terms are well-formed")
}

/// Element of `A ⊗ ∧^k Rⁿ`: polynomial coefficients on increasing tuples of
/// generator indices (0-based internally).
#[derive(Clone, PartialEq, Eq)]
pub struct RelativeClass {
    dim: usize,
    size: usize,
    degree: usize,
    comps: BTreeMap<Vec<usize>, Polynomial>,
}

impl RelativeClass {
    pub fn zero(dim: usize, size: usize, degree: usize) -> Self {
        RelativeClass {
            dim,
            size,
            degree,
            comps: BTreeMap::new(),
        }
    }

    /// Arbitrary-order index tuples are sorted with sign; repeats vanish.
    pub fn from_components(
        dim: usize,
        size: usize,
        degree: usize,
        comps: impl IntoIterator<Item = (Vec<usize>, Polynomial)>,
    ) -> Result<Self> {
        let mut out = RelativeClass::zero(dim, size, degree);
        for (idx, c) in comps {
            same_dim(dim, c.dim())?;
            if idx.len() != degree {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: idx.len(),
                });
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= size) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    dim: size,
                });
            }
            if let Some((odd, sorted)) = canonical_indices(&idx) {
                out.add_component(sorted, signed(c, odd));
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn system_size(&self) -> usize {
        self.size
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &Polynomial)> {
        self.comps.iter()
    }

    pub fn component(&self, idx: &[usize]) -> Polynomial {
        match canonical_indices(idx) {
            Some((odd, sorted)) => signed(
                self.comps
                    .get(&sorted)
                    .cloned()
                    .unwrap_or_else(|| Polynomial::zero(self.dim)),
                odd,
            ),
            None => Polynomial::zero(self.dim),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub(crate) fn add_component(&mut self, idx: Vec<usize>, c: Polynomial) {
        if c.is_zero() {
            return;
        }
        let slot = self
            .comps
            .entry(idx.clone())
            .or_insert_with(|| Polynomial::zero(c.dim()));
        *slot += &c;
        if slot.is_zero() {
            self.comps.remove(&idx);
        }
    }

    pub fn checked_add(&self, other: &RelativeClass) -> Result<RelativeClass> {
        same_dim(self.dim, other.dim)?;
        if self.size != other.size {
            return Err(Error::SystemSizeMismatch {
                expected: self.size,
                found: other.size,
            });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        let mut out = self.clone();
        for (i, c) in &other.comps {
            out.add_component(i.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Q) -> RelativeClass {
        let mut out = RelativeClass::zero(self.dim, self.size, self.degree);
        for (i, p) in &self.comps {
            out.add_component(i.clone(), p.scale(c));
        }
        out
    }

    /// Components keyed `"(i,j)"` with 1-based generator indices.
    pub fn labelled_components(&self, names: &[String]) -> BTreeMap<String, String> {
        self.comps
            .iter()
            .map(|(idx, c)| {
                let key = format!("({})", idx.iter().map(|i| i + 1).join(","));
                (key, c.to_string_with(names))
            })
            .collect()
    }
}

impl fmt::Debug for RelativeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RelativeClass[n={}, deg {}]{:?}",
            self.size,
            self.degree,
            self.labelled_components(&default_names(self.dim))
        )
    }
}

/// `d_hor(w ⊗ v) = Σ_i {f_i, w} ⊗ e_i ∧ v`, extended linearly.
pub fn d_hor(sys: &IntegrableSystem, c: &RelativeClass) -> Result<RelativeClass> {
    let n = sys.generators().len();
    if c.system_size() != n {
        return Err(Error::SystemSizeMismatch {
            expected: n,
            found: c.system_size(),
        });
    }
    same_dim(sys.dim(), c.dim())?;
    let mut out = RelativeClass::zero(c.dim(), n, c.degree() + 1);
    for (idx, w) in c.components() {
        for (i, f) in sys.generators().iter().enumerate() {
            if let Some((odd, merged)) = merge_indices(&[i], idx) {
                let b = poisson_bracket(sys.pi(), f, w)?;
                out.add_component(merged, signed(b, odd));
            }
        }
    }
    Ok(out)
}
