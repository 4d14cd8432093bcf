//! Hochschild cochains represented as polydifferential operators.
//!
//! A [`PolyDiffOp`] of arity `k` is a finite sum
//! `Σ c(x) ∂^{α_1} ⊗ … ⊗ ∂^{α_k}` with polynomial coefficients. The
//! representation is canonical (terms merged on identical multi-index tuples,
//! zero coefficients dropped), and since a differential operator with
//! polynomial coefficients has a unique normal form, two operators are equal
//! exactly when their term maps are equal.
//!
//! Sign conventions:
//! * `dφ(f_1..f_{k+1}) = f_1 φ(f_2..) + Σ_j (−1)^j φ(.., f_j f_{j+1}, ..) + (−1)^{k+1} φ(..) f_{k+1}`
//! * `(φ ∪ ψ)(f_1..f_{i+j}) = (−1)^{ij} φ(f_1..f_i) ψ(f_{i+1}..)`
//! * `φ ∘ ψ = Σ_{l=0}^{i−1} (−1)^{l(j−1)} φ(f_1..f_l, ψ(..), ..)` over all `i` slots
//! * `[φ, ψ] = φ∘ψ − (−1)^{(i−1)(j−1)} ψ∘φ`
//!
//! With these, `dφ = −[φ, m]` for every arity, where `m` is the
//! multiplication cochain; equivalently `dφ = (−1)^{k+1}[m, φ]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::One;

use crate::error::{same_dim, Error, Result};
use crate::exec::{self, Exec};
use crate::obstruction::IntegrableSystem;
use crate::poly::{default_names, Exponents, Polynomial, Q};

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// All ways of writing `n = k_1 + … + k_parts`, with multinomial weights.
fn compositions(n: u32, parts: usize) -> Vec<(BigInt, Vec<u32>)> {
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(n, parts, &mut Vec::new(), &mut raw);
    let nf = factorial(n);
    raw.into_iter()
        .map(|ks| {
            let denom = ks.iter().fold(BigInt::one(), |acc, &k| acc * factorial(k));
            (&nf / denom, ks)
        })
        .collect()
}

/// Generalized Leibniz rule: every split `α = γ_1 + … + γ_parts` with the
/// product of per-coordinate multinomial coefficients.
pub(crate) fn distribute(alpha: &Exponents, parts: usize) -> Vec<(Q, Vec<Exponents>)> {
    let dim = alpha.dim();
    if parts == 1 {
        return vec![(Q::one(), vec![alpha.clone()])];
    }
    if dim == 0 {
        return vec![(Q::one(), vec![Exponents::zeros(0); parts])];
    }
    let per_coord: Vec<Vec<(BigInt, Vec<u32>)>> = alpha
        .as_slice()
        .iter()
        .map(|&a| compositions(a, parts))
        .collect();
    let mut out = Vec::new();
    for choice in per_coord.iter().multi_cartesian_product() {
        let mut weight = BigInt::one();
        let mut split = vec![vec![0u32; dim]; parts];
        for (c, (w, ks)) in choice.iter().enumerate() {
            weight *= w;
            for (s, &k) in ks.iter().enumerate() {
                split[s][c] = k;
            }
        }
        out.push((
            Q::from_integer(weight),
            split.into_iter().map(Exponents::new).collect(),
        ));
    }
    out
}

/// Polydifferential operator `A^{⊗k} → A`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyDiffOp {
    dim: usize,
    arity: usize,
    terms: BTreeMap<Vec<Exponents>, Polynomial>,
}

impl PolyDiffOp {
    pub fn zero(dim: usize, arity: usize) -> Self {
        PolyDiffOp {
            dim,
            arity,
            terms: BTreeMap::new(),
        }
    }

    /// Builds an operator from `(coefficient, per-slot multi-indices)` terms.
    pub fn from_terms(
        dim: usize,
        arity: usize,
        terms: impl IntoIterator<Item = (Polynomial, Vec<Exponents>)>,
    ) -> Result<Self> {
        let mut op = PolyDiffOp::zero(dim, arity);
        for (c, slots) in terms {
            same_dim(dim, c.dim())?;
            if slots.len() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: slots.len(),
                });
            }
            for s in &slots {
                same_dim(dim, s.dim())?;
            }
            op.add_term(slots, c);
        }
        Ok(op)
    }

    /// Arity-0 cochain: the constant function `f`.
    pub fn constant(f: Polynomial) -> Self {
        let mut op = PolyDiffOp::zero(f.dim(), 0);
        op.add_term(vec![], f);
        op
    }

    /// The multiplication cochain `m(a, b) = ab`.
    pub fn multiplication(dim: usize) -> Self {
        Self::monomial(Polynomial::one(dim), vec![Exponents::zeros(dim); 2])
    }

    pub fn identity(dim: usize) -> Self {
        Self::monomial(Polynomial::one(dim), vec![Exponents::zeros(dim)])
    }

    /// Unary `c · ∂^α`.
    pub fn unary(c: Polynomial, alpha: Exponents) -> Self {
        Self::monomial(c, vec![alpha])
    }

    /// A single term `c · ∂^{α_1} ⊗ … ⊗ ∂^{α_k}`.
    pub fn monomial(c: Polynomial, slots: Vec<Exponents>) -> Self {
        let mut op = PolyDiffOp::zero(c.dim(), slots.len());
        op.add_term(slots, c);
        op
    }

    /// The vector field `Σ X^i ∂_i` as a unary operator.
    pub fn vector_field(comps: &[Polynomial]) -> Self {
        let dim = comps.len();
        let mut op = PolyDiffOp::zero(dim, 1);
        for (i, c) in comps.iter().enumerate() {
            op.add_term(vec![Exponents::unit(dim, i)], c.clone());
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Exponents>, &Polynomial)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest total derivative degree in any single slot.
    pub fn order(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|slots| slots.iter().map(Exponents::degree))
            .max()
            .unwrap_or(0)
    }

    /// Largest total degree among coefficient polynomials.
    pub fn coeff_degree(&self) -> u32 {
        self.terms.values().filter_map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn coeff(&self, slots: &[Exponents]) -> Polynomial {
        self.terms
            .get(slots)
            .cloned()
            .unwrap_or_else(|| Polynomial::zero(self.dim))
    }

    pub(crate) fn add_term(&mut self, slots: Vec<Exponents>, c: Polynomial) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(slots) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_compatible(&self, other: &PolyDiffOp) -> Result<()> {
        same_dim(self.dim, other.dim)?;
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &PolyDiffOp) -> Result<PolyDiffOp> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &PolyDiffOp) -> Result<PolyDiffOp> {
        self.checked_add(&other.neg())
    }

    pub fn neg(&self) -> PolyDiffOp {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, k: &Q) -> PolyDiffOp {
        let mut out = PolyDiffOp::zero(self.dim, self.arity);
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c.scale(k));
        }
        out
    }

    /// Multiplies every coefficient by `f` (post-multiplication of the output).
    pub fn mul_function(&self, f: &Polynomial) -> PolyDiffOp {
        let mut out = PolyDiffOp::zero(self.dim, self.arity);
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c * f);
        }
        out
    }

    /// Reorders arguments: the result evaluated at `(g_0..g_{k-1})` equals
    /// `self` evaluated at `(g_{perm[0]}, …, g_{perm[k-1]})`.
    pub fn permute_args(&self, perm: &[usize]) -> Result<PolyDiffOp> {
        if perm.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: perm.len(),
            });
        }
        let mut out = PolyDiffOp::zero(self.dim, self.arity);
        for (s, c) in &self.terms {
            let mut ns = vec![Exponents::zeros(self.dim); self.arity];
            for (slot, &target) in perm.iter().enumerate() {
                ns[target] = s[slot].clone();
            }
            out.add_term(ns, c.clone());
        }
        Ok(out)
    }

    /// `(a, b) ↦ B(a, b) − B(b, a)` for a bidifferential operator.
    pub fn antisymmetrize2(&self) -> Result<PolyDiffOp> {
        self.checked_sub(&self.permute_args(&[1, 0])?)
    }

    /// Evaluates the operator on concrete arguments.
    pub fn apply(&self, args: &[Polynomial]) -> Result<Polynomial> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: args.len(),
            });
        }
        for a in args {
            same_dim(self.dim, a.dim())?;
        }
        let mut acc = Polynomial::zero(self.dim);
        for (slots, c) in &self.terms {
            let mut t = c.clone();
            for (alpha, g) in slots.iter().zip(args) {
                if t.is_zero() {
                    break;
                }
                t = &t * &g.partial_multi(alpha);
            }
            acc += &t;
        }
        Ok(acc)
    }

    /// Hochschild differential, arity `k → k+1`.
    pub fn hochschild_d(&self) -> PolyDiffOp {
        let k = self.arity;
        let zero = Exponents::zeros(self.dim);
        let mut out = PolyDiffOp::zero(self.dim, k + 1);
        for (slots, c) in &self.terms {
            let mut first = vec![zero.clone()];
            first.extend(slots.iter().cloned());
            out.add_term(first, c.clone());

            for j in 1..=k {
                let neg = j % 2 == 1;
                for (w, parts) in distribute(&slots[j - 1], 2) {
                    let mut ns: Vec<Exponents> = slots[..j - 1].to_vec();
                    ns.extend(parts);
                    ns.extend(slots[j..].iter().cloned());
                    let w = if neg { -w } else { w };
                    out.add_term(ns, c.scale(&w));
                }
            }

            let mut last = slots.clone();
            last.push(zero.clone());
            out.add_term(last, if (k + 1) % 2 == 1 { -c } else { c.clone() });
        }
        out
    }

    /// Cup product with the `(−1)^{ij}` sign.
    pub fn cup(&self, other: &PolyDiffOp) -> Result<PolyDiffOp> {
        same_dim(self.dim, other.dim)?;
        let neg = (self.arity * other.arity) % 2 == 1;
        let mut out = PolyDiffOp::zero(self.dim, self.arity + other.arity);
        for (s1, c1) in &self.terms {
            for (s2, c2) in &other.terms {
                let mut ns = s1.clone();
                ns.extend(s2.iter().cloned());
                let c = c1 * c2;
                out.add_term(ns, if neg { -c } else { c });
            }
        }
        Ok(out)
    }

    /// Inserts `inner` into argument slot `slot` (0-based), without sign:
    /// `φ(f_1..f_slot, ψ(..), ..)`. Derivatives hitting the inner output are
    /// expanded with the Leibniz rule.
    pub fn compose_at(&self, slot: usize, inner: &PolyDiffOp) -> Result<PolyDiffOp> {
        same_dim(self.dim, inner.dim)?;
        if self.arity == 0 {
            return Err(Error::ZeroArityComposition);
        }
        if slot >= self.arity {
            return Err(Error::IndexOutOfRange {
                index: slot,
                dim: self.arity,
            });
        }
        let j = inner.arity;
        let mut out = PolyDiffOp::zero(self.dim, self.arity + j - 1);
        let mut splits: BTreeMap<&Exponents, Vec<(Q, Vec<Exponents>)>> = BTreeMap::new();
        for (outer_slots, c) in &self.terms {
            let alpha = &outer_slots[slot];
            let parts = splits
                .entry(alpha)
                .or_insert_with(|| distribute(alpha, j + 1));
            for (inner_slots, e) in &inner.terms {
                for (w, gammas) in parts.iter() {
                    let de = e.partial_multi(&gammas[0]);
                    if de.is_zero() {
                        continue;
                    }
                    let mut ns: Vec<Exponents> = outer_slots[..slot].to_vec();
                    for (g, b) in gammas[1..].iter().zip(inner_slots) {
                        ns.push(g.add(b));
                    }
                    ns.extend(outer_slots[slot + 1..].iter().cloned());
                    out.add_term(ns, (c * &de).scale(w));
                }
            }
        }
        Ok(out)
    }

    /// Gerstenhaber pre-Lie composition over all `i` insertion slots.
    pub fn gerst_circ(&self, other: &PolyDiffOp) -> Result<PolyDiffOp> {
        same_dim(self.dim, other.dim)?;
        if self.arity == 0 {
            return Err(Error::ZeroArityComposition);
        }
        let j = other.arity;
        let mut out = PolyDiffOp::zero(self.dim, self.arity + j - 1);
        for l in 0..self.arity {
            let part = self.compose_at(l, other)?;
            // (−1)^{l(j−1)}, with j−1 = −1 when j = 0
            let neg = l % 2 == 1 && (j == 0 || (j - 1) % 2 == 1);
            let part = if neg { part.neg() } else { part };
            out = out.checked_add(&part)?;
        }
        Ok(out)
    }

    /// Gerstenhaber bracket `φ∘ψ − (−1)^{(i−1)(j−1)} ψ∘φ`; a composition
    /// into an arity-0 cochain contributes zero. The bracket of two arity-0
    /// cochains lies in arity −1, which is empty; it is returned as the zero
    /// of arity 0 and must not be bracketed further.
    pub fn gerst_bracket(&self, other: &PolyDiffOp) -> Result<PolyDiffOp> {
        same_dim(self.dim, other.dim)?;
        let (i, j) = (self.arity, other.arity);
        if i + j == 0 {
            return Ok(PolyDiffOp::zero(self.dim, 0));
        }
        let target = i + j - 1;
        let lhs = if i == 0 {
            PolyDiffOp::zero(self.dim, target)
        } else {
            self.gerst_circ(other)?
        };
        let rhs = if j == 0 {
            PolyDiffOp::zero(self.dim, target)
        } else {
            other.gerst_circ(self)?
        };
        // (i−1)(j−1) is odd exactly when i and j are both even
        let plus = i % 2 == 0 && j % 2 == 0;
        if plus {
            lhs.checked_add(&rhs)
        } else {
            lhs.checked_sub(&rhs)
        }
    }

    pub fn to_string_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(slots, c)| {
                let ops = slots
                    .iter()
                    .map(|a| {
                        if a.is_zero() {
                            "1".to_string()
                        } else {
                            a.as_slice()
                                .iter()
                                .enumerate()
                                .filter(|(_, &k)| k > 0)
                                .map(|(i, &k)| {
                                    if k == 1 {
                                        format!("d_{}", names[i])
                                    } else {
                                        format!("d_{}^{}", names[i], k)
                                    }
                                })
                                .join("")
                        }
                    })
                    .join(" ⊗ ");
                format!("({})[{}]", c.to_string_with(names), ops)
            })
            .join(" + ")
    }
}

impl fmt::Debug for PolyDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PolyDiffOp[arity {}]({})",
            self.arity,
            self.to_string_with(&default_names(self.dim))
        )
    }
}

impl std::ops::Add for PolyDiffOp {
    type Output = PolyDiffOp;
    fn add(self, rhs: PolyDiffOp) -> PolyDiffOp {
        self.checked_add(&rhs).expect("operators of equal arity")
    }
}

/// One row of a restricted-value table: per-slot exponent vectors over the
/// generators and the operator's value on those generator monomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableEntry {
    pub args: Vec<Exponents>,
    pub value: Polynomial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictedTable {
    pub slot_degree: u32,
    pub entries: Vec<TableEntry>,
}

impl RestrictedTable {
    pub fn is_all_zero(&self) -> bool {
        self.entries.iter().all(|e| e.value.is_zero())
    }

    pub fn first_nonzero(&self) -> Option<&TableEntry> {
        self.entries.iter().find(|e| !e.value.is_zero())
    }
}

/// The monomials `f^β = Π f_i^{β_i}` with `|β| <= degree`, paired with `β`.
pub fn generator_monomials(gens: &[Polynomial], dim: usize, degree: u32) -> Vec<(Exponents, Polynomial)> {
    Exponents::all_up_to(gens.len(), degree)
        .into_iter()
        .map(|beta| {
            let mut p = Polynomial::one(dim);
            for (f, &k) in gens.iter().zip(beta.as_slice()) {
                if k > 0 {
                    p = &p * &f.pow(k);
                }
            }
            (beta, p)
        })
        .collect()
}

/// Evaluates `op` on every `k`-tuple of generator monomials of degree
/// `<= slot_degree` per slot.
pub fn restricted_values(
    op: &PolyDiffOp,
    sys: &IntegrableSystem,
    slot_degree: u32,
    exec: Exec,
) -> Result<RestrictedTable> {
    same_dim(op.dim(), sys.dim())?;
    values_on_monomials(op, sys.generators(), slot_degree, exec)
}

/// Same table as [`restricted_values`] for an arbitrary list of generators.
pub fn values_on_monomials(
    op: &PolyDiffOp,
    gens: &[Polynomial],
    slot_degree: u32,
    exec: Exec,
) -> Result<RestrictedTable> {
    for g in gens {
        same_dim(op.dim(), g.dim())?;
    }
    let monos = generator_monomials(gens, op.dim(), slot_degree);
    // cache ∂^α of every monomial for the α that actually occur
    let alphas: Vec<Exponents> = op
        .terms
        .keys()
        .flat_map(|s| s.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let derivs: Vec<BTreeMap<&Exponents, Polynomial>> = exec::map(exec, &monos, |(_, g)| {
        alphas.iter().map(|a| (a, g.partial_multi(a))).collect()
    });
    let k = op.arity();
    let tuples: Vec<Vec<usize>> = if k == 0 {
        vec![vec![]]
    } else {
        (0..k).map(|_| 0..monos.len()).multi_cartesian_product().collect()
    };
    let entries = exec::map(exec, &tuples, |tuple| {
        let mut value = Polynomial::zero(op.dim());
        for (slots, c) in &op.terms {
            let mut t = c.clone();
            for (alpha, &g) in slots.iter().zip(tuple) {
                if t.is_zero() {
                    break;
                }
                t = &t * &derivs[g][alpha];
            }
            value += &t;
        }
        TableEntry {
            args: tuple.iter().map(|&g| monos[g].0.clone()).collect(),
            value,
        }
    });
    Ok(RestrictedTable {
        slot_degree,
        entries,
    })
}

/// Whether `op` vanishes on the subalgebra generated by the system, decided
/// on the monomial table of slot degree `order(op) + 1`. Returns the first
/// non-zero entry as a witness.
pub fn vanishing_witness(
    op: &PolyDiffOp,
    sys: &IntegrableSystem,
    exec: Exec,
) -> Result<Option<TableEntry>> {
    if op.is_zero() {
        return Ok(None);
    }
    let table = restricted_values(op, sys, op.order() + 1, exec)?;
    Ok(table.first_nonzero().cloned())
}

pub fn vanishes_on(op: &PolyDiffOp, sys: &IntegrableSystem, exec: Exec) -> Result<bool> {
    Ok(vanishing_witness(op, sys, exec)?.is_none())
}
