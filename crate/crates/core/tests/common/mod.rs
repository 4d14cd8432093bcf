#![allow(dead_code)]

use std::path::PathBuf;

use deformq::{
    Exponents, FormalDiffeo, IntegrableSystem, PolyDiffOp, Polynomial, Polyvector, StarProduct,
    TruncatedSeries, Q,
};
use num_bigint::BigInt;
use rand::Rng;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn poly(src: &str, names: &[String]) -> Polynomial {
    Polynomial::parse(src, names).unwrap()
}

pub fn problem_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/problems")
        .join(format!("{name}.json"))
}

/// `(golden name, problem, command, extra flags)`.
pub const GOLDEN_CASES: &[(&str, &str, &str, &[&str])] = &[
    ("so3_check_poisson", "so3", "check-poisson", &[]),
    ("non_poisson_check_poisson", "non_poisson", "check-poisson", &[]),
    ("nonassoc_assoc_check", "nonassoc", "assoc-check", &[]),
    ("canonical_r2_assoc_check", "canonical_r2", "assoc-check", &[]),
    ("canonical_r4_commutator_table", "canonical_r4", "commutator-table", &[]),
    ("removable_commutator_table", "removable", "commutator-table", &[]),
    ("removable_obstruction", "removable", "obstruction", &["--order", "2"]),
    ("removable_eliminate", "removable", "eliminate", &[]),
    ("obstructed_obstruction", "obstructed", "obstruction", &[]),
    ("obstructed_eliminate", "obstructed", "eliminate", &[]),
    ("casimir_r3_eliminate", "casimir_r3", "eliminate", &["--seed", "99"]),
    ("canonical_r2_extend_star", "canonical_r2", "extend-star", &["--order", "1"]),
];

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"))
}

pub fn unit(dim: usize, i: usize) -> Exponents {
    let mut e = vec![0u32; dim];
    e[i] += 1;
    Exponents::new(e)
}

/// Moyal of `∂_i∧∂_j` to order 2 plus `ℏ²(∂_a⊗∂_b − ∂_b⊗∂_a)`.
pub fn moyal_plus(dim: usize, (i, j): (usize, usize), (a, b): (usize, usize)) -> StarProduct {
    let pi = Polyvector::basis(dim, &[i, j]).unwrap();
    let mut terms = StarProduct::moyal(&pi, 2).unwrap().terms().to_vec();
    let one = Polynomial::one(dim);
    let extra = PolyDiffOp::from_terms(
        dim,
        2,
        [
            (one.clone(), vec![unit(dim, a), unit(dim, b)]),
            (-&one, vec![unit(dim, b), unit(dim, a)]),
        ],
    )
    .unwrap();
    terms[1] = terms[1].checked_add(&extra).unwrap();
    StarProduct::new(dim, terms).unwrap()
}

/// R³, `π = ∂_x∧∂_y`, `C = R[y, z]`, with the removable `ℏ²` antisymmetric term.
pub fn removable() -> (StarProduct, IntegrableSystem) {
    let s = moyal_plus(3, (0, 1), (1, 2));
    let sys = IntegrableSystem::validated(
        Polyvector::basis(3, &[0, 1]).unwrap(),
        vec![Polynomial::var(3, 1), Polynomial::var(3, 2)],
        0,
    )
    .unwrap();
    (s, sys)
}

/// R⁴ `(x, y, z, w)`, `π = ∂_x∧∂_y`, `C = R[z, w]` of Casimirs.
pub fn obstructed() -> (StarProduct, IntegrableSystem) {
    let s = moyal_plus(4, (0, 1), (2, 3));
    let sys = IntegrableSystem::validated(
        Polyvector::basis(4, &[0, 1]).unwrap(),
        vec![Polynomial::var(4, 2), Polynomial::var(4, 3)],
        0,
    )
    .unwrap();
    (s, sys)
}

/// Moyal of `∂_x∧∂_y` on R³ to order `n`, with `C = R[y, z]`.
pub fn casimir_r3(n: usize) -> (StarProduct, IntegrableSystem) {
    let pi = Polyvector::basis(3, &[0, 1]).unwrap();
    let s = StarProduct::moyal(&pi, n).unwrap();
    let sys = IntegrableSystem::validated(
        pi,
        vec![Polynomial::var(3, 1), Polynomial::var(3, 2)],
        0,
    )
    .unwrap();
    (s, sys)
}

/// A random small rational in `[-3, 3]` with denominator at most 3.
pub fn small_q(rng: &mut impl Rng) -> Q {
    Q::new(BigInt::from(rng.gen_range(-3i64..=3)), BigInt::from(rng.gen_range(1i64..=3)))
}

/// Random polynomial in the variables `vars` of total degree `<= degree`.
pub fn random_poly(rng: &mut impl Rng, dim: usize, vars: &[usize], degree: u32) -> Polynomial {
    let mut p = Polynomial::zero(dim);
    for e in Exponents::all_up_to(vars.len(), degree) {
        if rng.gen_bool(0.5) {
            let mut full = vec![0u32; dim];
            for (k, &v) in vars.iter().enumerate() {
                full[v] = e.as_slice()[k];
            }
            p = &p + &Polynomial::monomial(dim, Exponents::new(full), small_q(rng));
        }
    }
    p
}

/// Random unary operator whose coefficients and derivatives involve only `vars`,
/// so it maps `R[vars]` into itself.
pub fn random_preserving_op(rng: &mut impl Rng, dim: usize, vars: &[usize], order: u32) -> PolyDiffOp {
    let mut terms = Vec::new();
    for e in Exponents::all_up_to(vars.len(), order) {
        if e.as_slice().iter().all(|&k| k == 0) || rng.gen_bool(0.4) {
            continue;
        }
        let mut alpha = vec![0u32; dim];
        for (k, &v) in vars.iter().enumerate() {
            alpha[v] = e.as_slice()[k];
        }
        terms.push((random_poly(rng, dim, vars, 1), vec![Exponents::new(alpha)]));
    }
    PolyDiffOp::from_terms(dim, 1, terms).unwrap()
}

pub fn random_preserving_diffeo(rng: &mut impl Rng, dim: usize, vars: &[usize], n: usize) -> FormalDiffeo {
    let terms = (0..n).map(|_| random_preserving_op(rng, dim, vars, 2)).collect();
    FormalDiffeo::new(dim, terms).unwrap()
}

/// `D(a) ∗ D(b) − D(b) ∗ D(a)` computed directly on series.
pub fn conjugated_commutator(
    s: &StarProduct,
    d: &FormalDiffeo,
    a: &Polynomial,
    b: &Polynomial,
) -> TruncatedSeries<Polynomial> {
    let da = d.apply(a).unwrap();
    let db = d.apply(b).unwrap();
    let ab = s.eval_series(&da, &db).unwrap();
    let ba = s.eval_series(&db, &da).unwrap();
    ab.zip_with(&ba, |x, y| x - y).unwrap()
}
