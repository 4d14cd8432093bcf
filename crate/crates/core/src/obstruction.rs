//! Integrable systems, obstruction classes and the order-by-order removal of
//! star commutators on the subalgebra `C = R[f_1, …, f_n]`.
//!
//! At order `n`, with `B_k|_C = 0` for `k < n`, the class
//! `χ_n = Σ_{i<j} (B_n(f_i,f_j) − B_n(f_j,f_i)) e_i∧e_j` is `d_hor`-closed.
//! A gauge `id + ℏ^{n−1}X + ℏ^n D_n` with a vector field `X` changes it by
//! `κ·d_hor(X(f))`, where `B_1 − B_1^swap = κ{,}`. So if `χ_n = d_hor(Y)`,
//! the lift `X(f_j) = −Y_j/κ` kills the antisymmetric part and `D_n` is then
//! solved to remove the symmetric remainder.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{same_dim, Error, Result};
use crate::exec::{self, Exec};
use crate::linalg::{dense_rank, LinearSystem, Solution};
use crate::multivec::{d_hor, hamiltonian_field, jacobi_check, poisson_bracket, Polyvector, RelativeClass};
use crate::poly::{default_names, q, Exponents, Polynomial, Q};
use crate::polydiff::{restricted_values, vanishing_witness, PolyDiffOp, TableEntry};
use crate::star::{gauge_transform, Bounds, FormalDiffeo, StarProduct};

/// A Poisson bivector with candidate commuting generators `f_1..f_n`.
///
/// Construction checks shapes only; [`IntegrableSystem::validate`] checks the
/// Poisson, involution and independence conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegrableSystem {
    pi: Polyvector,
    generators: Vec<Polynomial>,
}

/// Result of [`IntegrableSystem::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub poisson: bool,
    /// `[π, π]`; zero when `poisson` holds.
    pub jacobi_witness: Polyvector,
    /// Pairs `(i, j)`, `i < j`, with `{f_i, f_j} ≠ 0`.
    pub noncommuting: Vec<(usize, usize, Polynomial)>,
    /// Coordinate columns of a Jacobian minor that is not identically zero.
    pub nonzero_minor: Option<Vec<usize>>,
    /// Largest Jacobian rank at the sampled rational points.
    pub sampled_rank: usize,
    pub seed: u64,
}

impl ValidationReport {
    pub fn independent(&self) -> bool {
        self.nonzero_minor.is_some()
    }

    pub fn is_valid(&self) -> bool {
        self.poisson && self.noncommuting.is_empty() && self.independent()
    }

    /// Human-readable reasons for rejection; empty when valid.
    pub fn failures(&self, sys: &IntegrableSystem, names: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        if !self.poisson {
            out.push(format!(
                "[pi,pi] = {} ≠ 0",
                self.jacobi_witness.to_string_with(names)
            ));
        }
        for (i, j, b) in &self.noncommuting {
            out.push(format!(
                "{{{},{}}} ≠ 0 (bracket is {})",
                sys.generators[*i].to_string_with(names),
                sys.generators[*j].to_string_with(names),
                b.to_string_with(names)
            ));
        }
        if !self.independent() {
            out.push(format!(
                "generators are functionally dependent: every {0}x{0} Jacobian minor vanishes (sampled rank {1})",
                sys.generators.len(),
                self.sampled_rank
            ));
        }
        out
    }
}

impl IntegrableSystem {
    pub fn new(pi: Polyvector, generators: Vec<Polynomial>) -> Result<Self> {
        if pi.degree() != 2 {
            return Err(Error::DegreeMismatch {
                expected: 2,
                found: pi.degree(),
            });
        }
        for f in &generators {
            same_dim(pi.dim(), f.dim())?;
        }
        if generators.is_empty() || generators.len() > pi.dim() {
            return Err(Error::Precondition(format!(
                "need between 1 and {} generators, got {}",
                pi.dim(),
                generators.len()
            )));
        }
        Ok(IntegrableSystem { pi, generators })
    }

    /// Builds and validates; a failed check becomes a `Precondition` error.
    pub fn validated(pi: Polyvector, generators: Vec<Polynomial>, seed: u64) -> Result<Self> {
        let sys = Self::new(pi, generators)?;
        let report = sys.validate(seed)?;
        if report.is_valid() {
            Ok(sys)
        } else {
            let names = default_names(sys.dim());
            Err(Error::Precondition(report.failures(&sys, &names).join("; ")))
        }
    }

    pub fn dim(&self) -> usize {
        self.pi.dim()
    }

    pub fn pi(&self) -> &Polyvector {
        &self.pi
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    pub fn size(&self) -> usize {
        self.generators.len()
    }

    /// Whether every generator is a Casimir, so `d_hor` is identically zero.
    pub fn all_casimir(&self) -> Result<bool> {
        for f in &self.generators {
            if !hamiltonian_field(&self.pi, f)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.generators
            .iter()
            .map(|f| (0..self.dim()).map(|k| f.d(k)).collect())
            .collect()
    }

    pub fn validate(&self, seed: u64) -> Result<ValidationReport> {
        let jac = jacobi_check(&self.pi)?;
        let n = self.size();
        let mut noncommuting = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let b = poisson_bracket(&self.pi, &self.generators[i], &self.generators[j])?;
                if !b.is_zero() {
                    noncommuting.push((i, j, b));
                }
            }
        }
        let jm = self.jacobian();
        let nonzero_minor = (0..self.dim()).combinations(n).find(|cols| {
                let minor: Vec<Vec<Polynomial>> = jm
                    .iter()
                    .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
                    .collect();
                !determinant(&minor).is_zero()
            });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sampled_rank = 0;
        for _ in 0..4 {
            let point: Vec<Q> = (0..self.dim())
                .map(|_| Q::new(rng.gen_range(-40i64..=40).into(), rng.gen_range(1i64..=7).into()))
                .collect();
            let rows: Vec<Vec<Q>> = jm
                .iter()
                .map(|row| row.iter().map(|p| p.eval(&point)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            sampled_rank = sampled_rank.max(dense_rank(&rows));
        }
        if nonzero_minor.is_none() && sampled_rank == n {
            return Err(Error::InternalCheck(
                "symbolic and sampled Jacobian ranks disagree".into(),
            ));
        }
        Ok(ValidationReport {
            poisson: jac.is_poisson,
            jacobi_witness: jac.witness,
            noncommuting,
            nonzero_minor,
            sampled_rank,
            seed,
        })
    }
}

/// Leibniz expansion; the matrices here are at most a handful of rows.
fn determinant(m: &[Vec<Polynomial>]) -> Polynomial {
    let n = m.len();
    let dim = m.first().and_then(|r| r.first()).map_or(0, Polynomial::dim);
    let mut acc = Polynomial::zero(dim);
    for perm in (0..n).permutations(n) {
        let inversions = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| perm[i] > perm[j])
            .count();
        let mut t = Polynomial::one(dim);
        for (r, &c) in perm.iter().enumerate() {
            t = &t * &m[r][c];
            if t.is_zero() {
                break;
            }
        }
        if inversions % 2 == 1 {
            acc -= &t;
        } else {
            acc += &t;
        }
    }
    acc
}

/// `Σ_{i<j} (B_n(f_i,f_j) − B_n(f_j,f_i)) e_i∧e_j`, no preconditions.
pub fn commutator_class(s: &StarProduct, sys: &IntegrableSystem, n: usize) -> Result<RelativeClass> {
    same_dim(s.dim(), sys.dim())?;
    let b = s.term(n)?;
    let f = sys.generators();
    let mut comps = Vec::new();
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            let v = &b.apply(&[f[i].clone(), f[j].clone()])? - &b.apply(&[f[j].clone(), f[i].clone()])?;
            comps.push((vec![i, j], v));
        }
    }
    RelativeClass::from_components(sys.dim(), f.len(), 2, comps)
}

fn check_lower_orders(s: &StarProduct, sys: &IntegrableSystem, n: usize, exec: Exec) -> Result<()> {
    if s.certified_order() < n {
        return Err(Error::Precondition(format!(
            "star is certified associative only to order {}, need {n}",
            s.certified_order()
        )));
    }
    for k in 1..n {
        if let Some(w) = vanishing_witness(s.term(k)?, sys, exec)? {
            return Err(Error::Precondition(format!(
                "B_{k} does not vanish on C: value {} on generator monomials {:?}",
                w.value,
                w.args.iter().map(|a| a.as_slice().to_vec()).collect::<Vec<_>>()
            )));
        }
    }
    Ok(())
}

/// `χ_n` after checking associativity to order `n` and `B_k|_C = 0`, `k < n`.
pub fn obstruction_class(
    s: &StarProduct,
    sys: &IntegrableSystem,
    n: usize,
    exec: Exec,
) -> Result<RelativeClass> {
    check_lower_orders(s, sys, n, exec)?;
    commutator_class(s, sys, n)
}

/// Closedness checks at order `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CascadeReport {
    /// First generator-monomial triple where `dB_n` does not vanish.
    pub cocycle_witness: Option<TableEntry>,
    /// `d_hor(χ_n)`.
    pub d_hor: RelativeClass,
}

impl CascadeReport {
    pub fn is_closed(&self) -> bool {
        self.cocycle_witness.is_none() && self.d_hor.is_zero()
    }
}

pub fn cocycle_cascade_check(
    s: &StarProduct,
    sys: &IntegrableSystem,
    n: usize,
    exec: Exec,
) -> Result<CascadeReport> {
    let chi = obstruction_class(s, sys, n, exec)?;
    let cocycle_witness = vanishing_witness(&s.term(n)?.hochschild_d(), sys, exec)?;
    Ok(CascadeReport {
        cocycle_witness,
        d_hor: d_hor(sys, &chi)?,
    })
}

/// Row label of the exactness system: a component `(i, j)` and a monomial.
pub type ExactnessRow = (Vec<usize>, Exponents);

/// Proof that `d_hor(Y) = c` has no solution with `deg Y_j <= degree_bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactnessCertificate {
    pub degree_bound: u32,
    /// `d_hor` vanishes on all of `A ⊗ Rⁿ`, so infeasibility holds at every bound.
    pub zero_image: bool,
    /// Weights `y` on rows with `yᵀA = 0` and `yᵀc ≠ 0`.
    pub weights: Vec<(ExactnessRow, Q)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exactness {
    Exact(RelativeClass),
    Infeasible(ExactnessCertificate),
}

fn class_coordinates(c: &RelativeClass) -> BTreeMap<ExactnessRow, Q> {
    let mut out = BTreeMap::new();
    for (idx, p) in c.components() {
        for (e, v) in p.terms() {
            out.insert((idx.clone(), e.clone()), v.clone());
        }
    }
    out
}

fn exactness_columns(sys: &IntegrableSystem, degree: u32) -> Vec<(usize, Exponents)> {
    let monos = Exponents::all_up_to(sys.dim(), degree);
    (0..sys.size())
        .flat_map(|j| monos.iter().map(move |g| (j, g.clone())))
        .collect()
}

fn unit_class(sys: &IntegrableSystem, j: usize, g: &Exponents) -> RelativeClass {
    RelativeClass::from_components(
        sys.dim(),
        sys.size(),
        1,
        [(vec![j], Polynomial::monomial(sys.dim(), g.clone(), Q::one()))],
    )
    .expect("index within system")
}

/// Solves `d_hor(Y) = c` with `deg Y_j <= degree_bound`.
pub fn exactness_solve(
    sys: &IntegrableSystem,
    c: &RelativeClass,
    degree_bound: u32,
    exec: Exec,
) -> Result<Exactness> {
    if c.degree() != 2 {
        return Err(Error::DegreeMismatch {
            expected: 2,
            found: c.degree(),
        });
    }
    let closure = d_hor(sys, c)?;
    if !closure.is_zero() {
        return Err(Error::NotClosed(format!("{closure:?}")));
    }
    if c.is_zero() {
        return Ok(Exactness::Exact(RelativeClass::zero(sys.dim(), sys.size(), 1)));
    }
    let cols = exactness_columns(sys, degree_bound);
    let columns = exec::map(exec, &cols, |(j, g)| {
        class_coordinates(&d_hor(sys, &unit_class(sys, *j, g)).expect("shapes agree"))
    });
    let (lin, keys) = LinearSystem::from_columns(&columns, &class_coordinates(c));
    match lin.solve() {
        Solution::Feasible { particular, .. } => {
            let mut y = RelativeClass::zero(sys.dim(), sys.size(), 1);
            for (v, (j, g)) in particular.iter().zip(&cols) {
                if !v.is_zero() {
                    y = y.checked_add(&unit_class(sys, *j, g).scale(v))?;
                }
            }
            if d_hor(sys, &y)? != *c {
                return Err(Error::InternalCheck("exactness solution fails d_hor(Y) = c".into()));
            }
            Ok(Exactness::Exact(y))
        }
        Solution::Infeasible { certificate } => {
            let cert = ExactnessCertificate {
                degree_bound,
                zero_image: sys.all_casimir()?,
                weights: certificate
                    .into_iter()
                    .map(|(r, w)| (keys[r].clone(), w))
                    .collect(),
            };
            if !verify_exactness_certificate(sys, c, &cert)? {
                return Err(Error::InternalCheck("infeasibility certificate does not verify".into()));
            }
            Ok(Exactness::Infeasible(cert))
        }
    }
}

/// Recomputes `d_hor` on every ansatz column and checks `yᵀA = 0`, `yᵀc ≠ 0`.
pub fn verify_exactness_certificate(
    sys: &IntegrableSystem,
    c: &RelativeClass,
    cert: &ExactnessCertificate,
) -> Result<bool> {
    let weights: BTreeMap<&ExactnessRow, &Q> = cert.weights.iter().map(|(r, w)| (r, w)).collect();
    let dot = |coords: &BTreeMap<ExactnessRow, Q>| -> Q {
        coords
            .iter()
            .filter_map(|(k, v)| weights.get(k).map(|w| *w * v))
            .sum()
    };
    for (j, g) in exactness_columns(sys, cert.degree_bound) {
        if !dot(&class_coordinates(&d_hor(sys, &unit_class(sys, j, &g))?)).is_zero() {
            return Ok(false);
        }
    }
    if cert.zero_image && !sys.all_casimir()? {
        return Ok(false);
    }
    Ok(!dot(&class_coordinates(c)).is_zero())
}

/// `κ` with `B_1(a,b) − B_1(b,a) = κ{a,b}` as operators.
pub fn bracket_normalization(s: &StarProduct, pi: &Polyvector) -> Result<Q> {
    let anti = s.term(1)?.antisymmetrize2()?;
    let bracket = crate::multivec::hkr_to_cochain(pi).scale(&q(2));
    let Some((slots, c)) = bracket.terms().next() else {
        return Err(Error::Precondition("the Poisson bivector is zero".into()));
    };
    let (e, v) = c.terms().next().expect("non-zero coefficient");
    let kappa = anti.coeff(slots).coeff(e) / v;
    if anti != bracket.scale(&kappa) {
        return Err(Error::Precondition(
            "the antisymmetric part of B_1 is not a multiple of the Poisson bracket".into(),
        ));
    }
    Ok(kappa)
}

/// A vector field `X` with `X(f_j) = z_j`. Generators that are distinct
/// coordinates use the closed form; otherwise components of degree
/// `<= degree_bound` are solved for. `None` when the ansatz is infeasible.
pub fn lift_vector_field(
    sys: &IntegrableSystem,
    z: &RelativeClass,
    degree_bound: u32,
    exec: Exec,
) -> Result<Option<Vec<Polynomial>>> {
    if z.degree() != 1 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            found: z.degree(),
        });
    }
    let dim = sys.dim();
    let coords: Option<Vec<usize>> = sys
        .generators()
        .iter()
        .map(|f| (0..dim).find(|&k| *f == Polynomial::var(dim, k)))
        .collect();
    let lifted = match coords {
        Some(cs) if cs.iter().collect::<std::collections::BTreeSet<_>>().len() == cs.len() => {
            let mut x = vec![Polynomial::zero(dim); dim];
            for (j, &k) in cs.iter().enumerate() {
                x[k] = z.component(&[j]);
            }
            x
        }
        _ => {
            let monos = Exponents::all_up_to(dim, degree_bound);
            let cols: Vec<(usize, Exponents)> = (0..dim)
                .flat_map(|k| monos.iter().map(move |g| (k, g.clone())))
                .collect();
            let columns = exec::map(exec, &cols, |(k, g)| {
                let xg = Polynomial::monomial(dim, g.clone(), Q::one());
                let mut col = BTreeMap::new();
                for (j, f) in sys.generators().iter().enumerate() {
                    for (e, v) in (&xg * &f.d(*k)).terms() {
                        col.insert((j, e.clone()), v.clone());
                    }
                }
                col
            });
            let mut rhs = BTreeMap::new();
            for j in 0..sys.size() {
                for (e, v) in z.component(&[j]).terms() {
                    rhs.insert((j, e.clone()), v.clone());
                }
            }
            let (lin, _) = LinearSystem::from_columns(&columns, &rhs);
            let Solution::Feasible { particular, .. } = lin.solve() else {
                return Ok(None);
            };
            let mut x = vec![Polynomial::zero(dim); dim];
            for (v, (k, g)) in particular.iter().zip(&cols) {
                x[*k] += &Polynomial::monomial(dim, g.clone(), v.clone());
            }
            x
        }
    };
    let field = PolyDiffOp::vector_field(&lifted);
    for (j, f) in sys.generators().iter().enumerate() {
        if field.apply(std::slice::from_ref(f))? != z.component(&[j]) {
            return Err(Error::InternalCheck(format!("lift fails on generator {}", j + 1)));
        }
    }
    Ok(Some(lifted))
}

/// Gauge increment found by [`gauge_step`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeIncrement {
    /// Components of the order-`(n−1)` vector field, if one was needed.
    pub lift: Option<Vec<Polynomial>>,
    /// The order-`n` operator `D_n`.
    pub d_n: PolyDiffOp,
    pub diffeo: FormalDiffeo,
    pub transformed: StarProduct,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GaugeStep {
    Found(Box<GaugeIncrement>),
    Undecided(String),
}

fn unary_basis(dim: usize, bounds: Bounds) -> Vec<PolyDiffOp> {
    let gammas = Exponents::all_up_to(dim, bounds.degree);
    let alphas = Exponents::all_up_to(dim, bounds.op_order);
    gammas
        .iter()
        .flat_map(|g| {
            alphas.iter().map(move |a| {
                PolyDiffOp::unary(Polynomial::monomial(dim, g.clone(), Q::one()), a.clone())
            })
        })
        .collect()
}

fn table_coordinates(entries: &[TableEntry]) -> BTreeMap<(usize, Exponents), Q> {
    let mut out = BTreeMap::new();
    for (i, t) in entries.iter().enumerate() {
        for (e, v) in t.value.terms() {
            out.insert((i, e.clone()), v.clone());
        }
    }
    out
}

/// Builds `id + ℏ^{n−1}X + ℏ^n D_n` removing `B_n` on `C`, given
/// `d_hor(Y) = χ_n`.
pub fn gauge_step(
    s: &StarProduct,
    sys: &IntegrableSystem,
    n: usize,
    y: &RelativeClass,
    bounds: Bounds,
    exec: Exec,
) -> Result<GaugeStep> {
    check_lower_orders(s, sys, n, exec)?;
    let dim = s.dim();
    let order = s.order();
    let mut terms = vec![PolyDiffOp::zero(dim, 1); order];

    let lift = if y.is_zero() {
        None
    } else if n == 1 {
        return Ok(GaugeStep::Undecided(
            "a non-zero order-1 class cannot be changed by a gauge".into(),
        ));
    } else {
        let kappa = bracket_normalization(s, sys.pi())?;
        let z = y.scale(&-kappa.recip());
        match lift_vector_field(sys, &z, bounds.degree, exec)? {
            Some(x) => {
                terms[n - 2] = PolyDiffOp::vector_field(&x);
                Some(x)
            }
            None => {
                return Ok(GaugeStep::Undecided(format!(
                    "no vector-field lift of degree <= {}",
                    bounds.degree
                )))
            }
        }
    };

    let partial = gauge_transform(s, &FormalDiffeo::new(dim, terms.clone())?)?;
    let remainder = partial.term(n)?;
    let slot_degree = remainder.order().max(bounds.op_order) + 1;
    let rhs_table = restricted_values(remainder, sys, slot_degree, exec)?;
    let basis = unary_basis(dim, bounds);
    let columns = exec::map(exec, &basis, |u| {
        let t = restricted_values(&u.hochschild_d(), sys, slot_degree, Exec::Sequential)
            .expect("dimensions agree");
        table_coordinates(&t.entries)
    });
    let rhs: BTreeMap<_, _> = table_coordinates(&rhs_table.entries)
        .into_iter()
        .map(|(k, v)| (k, -v))
        .collect();
    let (lin, _) = LinearSystem::from_columns(&columns, &rhs);
    let Solution::Feasible { particular, .. } = lin.solve() else {
        return Ok(GaugeStep::Undecided(format!(
            "no order-{n} gauge term with coefficient degree <= {} and order <= {}",
            bounds.degree, bounds.op_order
        )));
    };
    let mut d_n = PolyDiffOp::zero(dim, 1);
    for (v, u) in particular.iter().zip(&basis) {
        if !v.is_zero() {
            d_n = d_n.checked_add(&u.scale(v))?;
        }
    }
    terms[n - 1] = d_n.clone();
    let diffeo = FormalDiffeo::new(dim, terms)?;
    let transformed = gauge_transform(s, &diffeo)?;
    for k in 1..=n {
        if vanishing_witness(transformed.term(k)?, sys, exec)?.is_some() {
            return Err(Error::InternalCheck(format!(
                "gauged B_{k} does not vanish on C"
            )));
        }
    }
    Ok(GaugeStep::Found(Box::new(GaugeIncrement {
        lift,
        d_n,
        diffeo,
        transformed,
    })))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Trivialized,
    Obstructed,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepAction {
    /// `B_n` already vanished on `C`.
    AlreadyVanishing,
    Gauged {
        exact: RelativeClass,
        lift: Option<Vec<Polynomial>>,
        d_n: PolyDiffOp,
    },
    Obstructed(ExactnessCertificate),
    Undecided(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub order: usize,
    pub class: RelativeClass,
    pub action: StepAction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObstructionReport {
    pub status: Status,
    /// Largest `n` with `B′_k|_C = 0` for all `k <= n`.
    pub order_reached: usize,
    pub steps: Vec<StepRecord>,
    pub gauge: FormalDiffeo,
    pub transformed: StarProduct,
    pub bounds: Bounds,
}

impl ObstructionReport {
    pub fn classes(&self) -> impl Iterator<Item = &RelativeClass> {
        self.steps.iter().map(|s| &s.class)
    }
}

/// Runs the elimination for `n = 1..=order` on the truncation of `s`.
pub fn eliminate_to_order(
    s: &StarProduct,
    sys: &IntegrableSystem,
    order: usize,
    bounds: Bounds,
    exec: Exec,
) -> Result<ObstructionReport> {
    same_dim(s.dim(), sys.dim())?;
    let start = s.truncate(order)?;
    if start.certified_order() < order {
        return Err(Error::Precondition(format!(
            "star is certified associative only to order {}, need {order}",
            start.certified_order()
        )));
    }
    let dim = s.dim();
    let mut current = start.clone();
    let mut gauge = FormalDiffeo::identity(dim, order);
    let mut steps = Vec::new();
    let mut status = Status::Trivialized;
    let mut order_reached = 0;

    for n in 1..=order {
        let class = obstruction_class(&current, sys, n, exec)?;
        if vanishing_witness(current.term(n)?, sys, exec)?.is_none() {
            steps.push(StepRecord {
                order: n,
                class,
                action: StepAction::AlreadyVanishing,
            });
            order_reached = n;
            continue;
        }
        let cascade = cocycle_cascade_check(&current, sys, n, exec)?;
        if !cascade.is_closed() {
            return Err(Error::InternalCheck(format!(
                "order-{n} class fails the closedness checks: {cascade:?}"
            )));
        }
        let action = match exactness_solve(sys, &class, bounds.degree, exec)? {
            Exactness::Infeasible(cert) => {
                status = if cert.zero_image {
                    Status::Obstructed
                } else {
                    Status::Undecided
                };
                StepAction::Obstructed(cert)
            }
            Exactness::Exact(y) => match gauge_step(&current, sys, n, &y, bounds, exec)? {
                GaugeStep::Undecided(reason) => {
                    status = Status::Undecided;
                    StepAction::Undecided(reason)
                }
                GaugeStep::Found(inc) => {
                    gauge = gauge.compose(&inc.diffeo)?;
                    current = inc.transformed;
                    order_reached = n;
                    StepAction::Gauged {
                        exact: y,
                        lift: inc.lift,
                        d_n: inc.d_n,
                    }
                }
            },
        };
        steps.push(StepRecord {
            order: n,
            class,
            action,
        });
        if status != Status::Trivialized {
            break;
        }
    }

    if status == Status::Trivialized {
        audit(&start, sys, &gauge, &current, exec)?;
    }
    Ok(ObstructionReport {
        status,
        order_reached,
        steps,
        gauge,
        transformed: current,
        bounds,
    })
}

/// Independent final check: recompute the gauge from scratch and re-tabulate
/// every order on generator monomials.
fn audit(
    start: &StarProduct,
    sys: &IntegrableSystem,
    gauge: &FormalDiffeo,
    transformed: &StarProduct,
    exec: Exec,
) -> Result<()> {
    if gauge_transform(start, gauge)? != *transformed {
        return Err(Error::InternalCheck(
            "accumulated gauge does not reproduce the transformed star".into(),
        ));
    }
    for (k, b) in transformed.terms().iter().enumerate() {
        let table = restricted_values(b, sys, b.order() + 1, exec)?;
        if !table.is_all_zero() {
            return Err(Error::InternalCheck(format!(
                "audit: B′_{} does not vanish on C",
                k + 1
            )));
        }
    }
    Ok(())
}
