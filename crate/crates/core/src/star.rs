//! Truncated star products and formal diffeomorphisms.
//!
//! The formal parameter is real: Moyal's `exp((iℏ/2)π)` becomes
//! `exp((ℏ/2)P)` with `P = Σ π^{ij} ∂_i ⊗ ∂_j`, so every coefficient is
//! rational and `B_1 − B_1^swap = {,}`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{same_dim, Error, Result};
use crate::exec::{self, Exec};
use crate::linalg::{LinearSystem, Solution};
use crate::multivec::Polyvector;
use crate::poly::{q, Exponents, Polynomial, Q};
use crate::polydiff::PolyDiffOp;
use crate::series::TruncatedSeries;

/// `a ∗ b = ab + Σ_{k=1}^{N} ℏ^k B_k(a, b)`.
///
/// `certified` is the largest `n` such that every residual `R_k`, `k <= n`,
/// is known to vanish.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarProduct {
    dim: usize,
    series: TruncatedSeries<PolyDiffOp>,
    certified: usize,
}

impl StarProduct {
    /// Builds a star from `B_1..B_N` and certifies associativity order by order.
    pub fn new(dim: usize, terms: Vec<PolyDiffOp>) -> Result<Self> {
        let mut s = Self::uncertified(dim, terms)?;
        s.certified = s.certify()?;
        Ok(s)
    }

    /// Like [`StarProduct::new`] but with an empty certificate.
    pub fn uncertified(dim: usize, terms: Vec<PolyDiffOp>) -> Result<Self> {
        for b in &terms {
            same_dim(dim, b.dim())?;
            if b.arity() != 2 {
                return Err(Error::ArityMismatch {
                    expected: 2,
                    found: b.arity(),
                });
            }
        }
        let mut coeffs = vec![PolyDiffOp::multiplication(dim)];
        coeffs.extend(terms);
        Ok(StarProduct {
            dim,
            series: TruncatedSeries::new(coeffs),
            certified: 0,
        })
    }

    /// The undeformed product to order `n`.
    pub fn trivial(dim: usize, n: usize) -> Self {
        StarProduct {
            dim,
            series: TruncatedSeries::new(
                std::iter::once(PolyDiffOp::multiplication(dim))
                    .chain((0..n).map(|_| PolyDiffOp::zero(dim, 2)))
                    .collect(),
            ),
            certified: n,
        }
    }

    /// Moyal product of a constant bivector, `B_k = P^k / (2^k k!)`.
    pub fn moyal(pi: &Polyvector, n: usize) -> Result<Self> {
        if pi.degree() != 2 {
            return Err(Error::DegreeMismatch {
                expected: 2,
                found: pi.degree(),
            });
        }
        let dim = pi.dim();
        let mut p_terms: Vec<(Q, Exponents, Exponents)> = Vec::new();
        for (idx, c) in pi.components() {
            let c = c
                .as_constant()
                .ok_or_else(|| Error::NonConstantBivector(idx.clone()))?;
            let (ei, ej) = (Exponents::unit(dim, idx[0]), Exponents::unit(dim, idx[1]));
            p_terms.push((c.clone(), ei.clone(), ej.clone()));
            p_terms.push((-c, ej, ei));
        }
        // symbol of P^k as a map (α, β) -> coefficient
        let mut power: BTreeMap<(Exponents, Exponents), Q> =
            BTreeMap::from([((Exponents::zeros(dim), Exponents::zeros(dim)), Q::one())]);
        let mut coeffs = vec![PolyDiffOp::multiplication(dim)];
        let mut norm = Q::one();
        for k in 1..=n {
            let mut next: BTreeMap<(Exponents, Exponents), Q> = BTreeMap::new();
            for ((a, b), c) in &power {
                for (pc, pa, pb) in &p_terms {
                    *next.entry((a.add(pa), b.add(pb))).or_insert_with(Q::zero) += c * pc;
                }
            }
            next.retain(|_, c| !c.is_zero());
            power = next;
            norm /= q(2 * k as i64);
            let op = PolyDiffOp::from_terms(
                dim,
                2,
                power.iter().map(|((a, b), c)| {
                    (
                        Polynomial::constant(dim, c * &norm),
                        vec![a.clone(), b.clone()],
                    )
                }),
            )?;
            coeffs.push(op);
        }
        Ok(StarProduct {
            dim,
            series: TruncatedSeries::new(coeffs),
            certified: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    pub fn certified_order(&self) -> usize {
        self.certified
    }

    /// `B_k`, with `B_0 = m`.
    pub fn term(&self, k: usize) -> Result<&PolyDiffOp> {
        self.series.coeff(k).ok_or(Error::OrderOutOfRange {
            order: k,
            max: self.order(),
        })
    }

    pub fn terms(&self) -> &[PolyDiffOp] {
        &self.series.coeffs()[1..]
    }

    /// Drops every `B_k` with `k > n`.
    pub fn truncate(&self, n: usize) -> Result<StarProduct> {
        if n > self.order() {
            return Err(Error::OrderOutOfRange {
                order: n,
                max: self.order(),
            });
        }
        Ok(StarProduct {
            dim: self.dim,
            series: TruncatedSeries::new(self.series.coeffs()[..=n].to_vec()),
            certified: self.certified.min(n),
        })
    }

    /// Appends `B_{N+1}`; the certificate grows only if `R_{N+1}` vanishes.
    pub fn extended(&self, next: PolyDiffOp) -> Result<StarProduct> {
        let mut terms = self.terms().to_vec();
        terms.push(next);
        let mut s = StarProduct::uncertified(self.dim, terms)?;
        s.certified = self.certified;
        if s.certified == self.order() && s.assoc_residual(s.order())?.is_zero() {
            s.certified = s.order();
        }
        Ok(s)
    }

    /// Coefficients `B_k(a, b)`, `k = 0..=N`.
    pub fn eval(&self, a: &Polynomial, b: &Polynomial) -> Result<TruncatedSeries<Polynomial>> {
        same_dim(self.dim, a.dim())?;
        same_dim(self.dim, b.dim())?;
        let vals = self
            .series
            .coeffs()
            .iter()
            .map(|op| op.apply(&[a.clone(), b.clone()]))
            .collect::<Result<Vec<_>>>()?;
        Ok(TruncatedSeries::new(vals))
    }

    /// Star product of two truncated series of functions.
    pub fn eval_series(
        &self,
        u: &TruncatedSeries<Polynomial>,
        v: &TruncatedSeries<Polynomial>,
    ) -> Result<TruncatedSeries<Polynomial>> {
        if u.order() != self.order() || v.order() != self.order() {
            return Err(Error::OrderMismatch(self.order(), u.order().max(v.order())));
        }
        let n = self.order();
        let mut out = vec![Polynomial::zero(self.dim); n + 1];
        for (k, op) in self.series.coeffs().iter().enumerate() {
            for p in 0..=n - k {
                for r in 0..=n - k - p {
                    let val = op.apply(&[u.coeffs()[p].clone(), v.coeffs()[r].clone()])?;
                    out[k + p + r] += &val;
                }
            }
        }
        Ok(TruncatedSeries::new(out))
    }

    /// `a ∗ b − b ∗ a`.
    pub fn commutator(&self, a: &Polynomial, b: &Polynomial) -> Result<TruncatedSeries<Polynomial>> {
        let ab = self.eval(a, b)?;
        let ba = self.eval(b, a)?;
        ab.zip_with(&ba, |x, y| x - y)
    }

    /// `R_n = Σ_{k+l=n} B_k ∘ B_l`, i.e.
    /// `Σ B_k(B_l(a,b),c) − B_k(a,B_l(b,c))`.
    pub fn assoc_residual(&self, n: usize) -> Result<PolyDiffOp> {
        if n > self.order() {
            return Err(Error::OrderOutOfRange {
                order: n,
                max: self.order(),
            });
        }
        let c = self.series.coeffs();
        let mut acc = PolyDiffOp::zero(self.dim, 3);
        for k in 0..=n {
            if c[k].is_zero() || c[n - k].is_zero() {
                continue;
            }
            acc = acc.checked_add(&c[k].gerst_circ(&c[n - k])?)?;
        }
        Ok(acc)
    }

    /// Largest `n` with `R_k = 0` for all `k <= n`.
    pub fn certify(&self) -> Result<usize> {
        for n in 1..=self.order() {
            if !self.assoc_residual(n)?.is_zero() {
                return Ok(n - 1);
            }
        }
        Ok(self.order())
    }

    /// `Σ_{k+l=n, k,l>=1} B_k ∘ B_l`, the right-hand side of `dB_n = …`.
    pub fn mc_rhs(&self, n: usize) -> Result<PolyDiffOp> {
        let c = self.series.coeffs();
        let mut acc = PolyDiffOp::zero(self.dim, 3);
        for k in 1..n {
            let l = n - k;
            if k > self.order() || l > self.order() || c[k].is_zero() || c[l].is_zero() {
                continue;
            }
            acc = acc.checked_add(&c[k].gerst_circ(&c[l])?)?;
        }
        Ok(acc)
    }
}

/// `D = id + Σ_{k=1}^{N} ℏ^k D_k` with unary `D_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalDiffeo {
    dim: usize,
    series: TruncatedSeries<PolyDiffOp>,
}

impl FormalDiffeo {
    pub fn identity(dim: usize, n: usize) -> Self {
        FormalDiffeo {
            dim,
            series: TruncatedSeries::new(
                std::iter::once(PolyDiffOp::identity(dim))
                    .chain((0..n).map(|_| PolyDiffOp::zero(dim, 1)))
                    .collect(),
            ),
        }
    }

    /// Builds `id + Σ ℏ^k D_k` from `D_1..D_N`.
    pub fn new(dim: usize, terms: Vec<PolyDiffOp>) -> Result<Self> {
        for d in &terms {
            same_dim(dim, d.dim())?;
            if d.arity() != 1 {
                return Err(Error::ArityMismatch {
                    expected: 1,
                    found: d.arity(),
                });
            }
        }
        let mut coeffs = vec![PolyDiffOp::identity(dim)];
        coeffs.extend(terms);
        Ok(FormalDiffeo {
            dim,
            series: TruncatedSeries::new(coeffs),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    pub fn term(&self, k: usize) -> Result<&PolyDiffOp> {
        self.series.coeff(k).ok_or(Error::OrderOutOfRange {
            order: k,
            max: self.order(),
        })
    }

    pub fn terms(&self) -> &[PolyDiffOp] {
        &self.series.coeffs()[1..]
    }

    pub fn is_identity(&self) -> bool {
        self.terms().iter().all(PolyDiffOp::is_zero)
    }

    /// `(self ∘ other)(a) = self(other(a))`.
    pub fn compose(&self, other: &FormalDiffeo) -> Result<FormalDiffeo> {
        same_dim(self.dim, other.dim)?;
        let s = self
            .series
            .combine(&other.series, |a, b| {
                a.compose_at(0, b).expect("unary operators of equal dimension")
            })?;
        Ok(FormalDiffeo {
            dim: self.dim,
            series: s,
        })
    }

    /// `G_0 = id`, `G_n = −Σ_{k=1}^{n} D_k ∘ G_{n−k}`.
    pub fn inverse(&self) -> FormalDiffeo {
        let d = self.series.coeffs();
        let mut g = vec![PolyDiffOp::identity(self.dim)];
        for n in 1..=self.order() {
            let mut acc = PolyDiffOp::zero(self.dim, 1);
            for k in 1..=n {
                if d[k].is_zero() || g[n - k].is_zero() {
                    continue;
                }
                let t = d[k].compose_at(0, &g[n - k]).expect("unary composition");
                acc = acc.checked_sub(&t).expect("unary operators");
            }
            g.push(acc);
        }
        FormalDiffeo {
            dim: self.dim,
            series: TruncatedSeries::new(g),
        }
    }

    /// `D(f)` as a truncated series.
    pub fn apply(&self, f: &Polynomial) -> Result<TruncatedSeries<Polynomial>> {
        Ok(TruncatedSeries::new(
            self.series
                .coeffs()
                .iter()
                .map(|d| d.apply(std::slice::from_ref(f)))
                .collect::<Result<Vec<_>>>()?,
        ))
    }

    /// `D(u)` for a series `u`, truncated at the common order.
    pub fn apply_series(&self, u: &TruncatedSeries<Polynomial>) -> Result<TruncatedSeries<Polynomial>> {
        if u.order() != self.order() {
            return Err(Error::OrderMismatch(self.order(), u.order()));
        }
        let n = self.order();
        let mut out = vec![Polynomial::zero(self.dim); n + 1];
        for (k, d) in self.series.coeffs().iter().enumerate() {
            for p in 0..=n - k {
                out[k + p] += &d.apply(std::slice::from_ref(&u.coeffs()[p]))?;
            }
        }
        Ok(TruncatedSeries::new(out))
    }
}

/// `a ∗′ b = D⁻¹(D(a) ∗ D(b))`.
pub fn gauge_transform(s: &StarProduct, d: &FormalDiffeo) -> Result<StarProduct> {
    same_dim(s.dim, d.dim)?;
    if s.order() != d.order() {
        return Err(Error::OrderMismatch(s.order(), d.order()));
    }
    let n = s.order();
    let b = s.series.coeffs();
    let dd = d.series.coeffs();
    let g = d.inverse();
    let g = g.series.coeffs();
    // E_t = Σ_{k+p+r=t} B_k(D_p ·, D_r ·)
    let mut e = vec![PolyDiffOp::zero(s.dim, 2); n + 1];
    for (k, bk) in b.iter().enumerate() {
        if bk.is_zero() {
            continue;
        }
        for p in 0..=n - k {
            if dd[p].is_zero() {
                continue;
            }
            let left = bk.compose_at(0, &dd[p])?;
            for r in 0..=n - k - p {
                if dd[r].is_zero() {
                    continue;
                }
                let t = left.compose_at(1, &dd[r])?;
                e[k + p + r] = e[k + p + r].checked_add(&t)?;
            }
        }
    }
    let mut out = Vec::with_capacity(n + 1);
    for t in 0..=n {
        let mut acc = PolyDiffOp::zero(s.dim, 2);
        for r in 0..=t {
            if g[r].is_zero() || e[t - r].is_zero() {
                continue;
            }
            acc = acc.checked_add(&g[r].compose_at(0, &e[t - r])?)?;
        }
        out.push(acc);
    }
    if out[0] != PolyDiffOp::multiplication(s.dim) {
        return Err(Error::InternalCheck("gauge changed the order-0 product".into()));
    }
    Ok(StarProduct {
        dim: s.dim,
        series: TruncatedSeries::new(out),
        certified: s.certified,
    })
}

/// Coefficient-degree and operator-order caps of a polynomial ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Bounds {
    pub degree: u32,
    pub op_order: u32,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            degree: 2,
            op_order: 2,
        }
    }
}

/// Outcome of [`extend_one_order`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extension {
    /// `particular` solves the constraint; adding any element of the span of
    /// `cocycles` keeps it solved.
    Found {
        particular: PolyDiffOp,
        cocycles: Vec<PolyDiffOp>,
    },
    /// No solution inside the ansatz; says nothing about larger bounds.
    Undecided { bounds: Bounds, unknowns: usize },
}

/// Every bidifferential monomial `x^γ ∂^α ⊗ ∂^β` inside the bounds.
fn bidiff_basis(dim: usize, bounds: Bounds) -> Vec<PolyDiffOp> {
    let gammas = Exponents::all_up_to(dim, bounds.degree);
    let alphas = Exponents::all_up_to(dim, bounds.op_order);
    let mut out = Vec::with_capacity(gammas.len() * alphas.len() * alphas.len());
    for g in &gammas {
        for a in &alphas {
            for b in &alphas {
                out.push(PolyDiffOp::monomial(
                    Polynomial::monomial(dim, g.clone(), Q::one()),
                    vec![a.clone(), b.clone()],
                ));
            }
        }
    }
    out
}

/// Flattens an operator into `(slots, coefficient monomial) -> value`.
pub(crate) fn op_coordinates(op: &PolyDiffOp) -> BTreeMap<(Vec<Exponents>, Exponents), Q> {
    let mut out = BTreeMap::new();
    for (slots, c) in op.terms() {
        for (e, v) in c.terms() {
            out.insert((slots.clone(), e.clone()), v.clone());
        }
    }
    out
}

/// Whether `candidate` can serve as `B_{N+1}`: `d candidate = Σ B_k ∘ B_l`.
pub fn satisfies_constraint(s: &StarProduct, candidate: &PolyDiffOp) -> Result<bool> {
    same_dim(s.dim, candidate.dim())?;
    Ok(candidate.hochschild_d() == s.mc_rhs(s.order() + 1)?)
}

/// Solves `d B_{N+1} = Σ_{k+l=N+1; k,l>=1} B_k ∘ B_l` inside the ansatz.
pub fn extend_one_order(s: &StarProduct, bounds: Bounds, exec: Exec) -> Result<Extension> {
    if s.certified_order() < s.order() {
        return Err(Error::Precondition(format!(
            "star is certified only to order {} of {}",
            s.certified_order(),
            s.order()
        )));
    }
    let target = s.mc_rhs(s.order() + 1)?;
    let basis = bidiff_basis(s.dim, bounds);
    let columns = exec::map(exec, &basis, |b| op_coordinates(&b.hochschild_d()));
    let (system, _) = LinearSystem::from_columns(&columns, &op_coordinates(&target));
    let assemble = |x: &[Q]| {
        let mut acc = PolyDiffOp::zero(s.dim, 2);
        for (c, b) in x.iter().zip(&basis) {
            if !c.is_zero() {
                acc = acc.checked_add(&b.scale(c)).expect("same arity");
            }
        }
        acc
    };
    match system.solve() {
        Solution::Infeasible { .. } => Ok(Extension::Undecided {
            bounds,
            unknowns: basis.len(),
        }),
        Solution::Feasible {
            particular,
            nullspace,
        } => {
            let particular = assemble(&particular);
            if !satisfies_constraint(s, &particular)? {
                return Err(Error::InternalCheck(
                    "extension fails the order-(N+1) residual".into(),
                ));
            }
            let cocycles = nullspace.iter().map(|v| assemble(v)).collect();
            Ok(Extension::Found {
                particular,
                cocycles,
            })
        }
    }
}
