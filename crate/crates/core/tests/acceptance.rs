//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit on failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command as Process, ExitCode};

use common::*;
use deformq::multivec::jacobi_check;
use deformq::polydiff::{generator_monomials, restricted_values};
use deformq::star::{satisfies_constraint, Extension};
use deformq::{
    commutator_class, d_hor, eliminate_to_order, extend_one_order, gauge_transform,
    hkr_to_cochain, Bounds, Exec, Exponents, IntegrableSystem, PolyDiffOp, Polynomial, Polyvector,
    RelativeClass, StarProduct, Status, TruncatedSeries,
};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn twisted(p: usize, q: usize) -> bool {
    (p + 1) * (q + 1) % 2 == 1
}

fn random_op(rng: &mut ChaCha8Rng, dim: usize, arity: usize) -> PolyDiffOp {
    let all: Vec<usize> = (0..dim).collect();
    let alphas = Exponents::all_up_to(dim, 2);
    let terms = (0..rng.gen_range(1..=3))
        .map(|_| {
            let slots = (0..arity).map(|_| alphas[rng.gen_range(0..alphas.len())].clone()).collect();
            (random_poly(rng, dim, &all, 1), slots)
        })
        .collect::<Vec<_>>();
    PolyDiffOp::from_terms(dim, arity, terms).unwrap()
}

fn hochschild_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = 120;
    for case in 0..cases {
        let dim = rng.gen_range(1..=4);
        let m = PolyDiffOp::multiplication(dim);
        let arities: Vec<usize> = (0..3).map(|_| rng.gen_range(0..=2)).collect();
        let a = random_op(&mut rng, dim, arities[0]);
        let b = random_op(&mut rng, dim, arities[1]);
        let c = random_op(&mut rng, dim, arities[2].max(1));
        ensure!(a.hochschild_d().hochschild_d().is_zero(), "case {case}: d∘d ≠ 0");
        ensure!(
            a.hochschild_d() == a.gerst_bracket(&m).unwrap().neg(),
            "case {case}: d ≠ −[·, m]"
        );
        let ab = a.gerst_bracket(&b).unwrap();
        let ba = b.gerst_bracket(&a).unwrap();
        let expected = if twisted(a.arity(), b.arity()) { ba } else { ba.neg() };
        ensure!(ab == expected, "case {case}: graded antisymmetry fails");
        let lhs = a.gerst_bracket(&b.gerst_bracket(&c).unwrap()).unwrap();
        // two functions bracket into the empty arity −1 space
        let first = if a.arity() + b.arity() == 0 {
            PolyDiffOp::zero(dim, lhs.arity())
        } else {
            ab.gerst_bracket(&c).unwrap()
        };
        let second = b.gerst_bracket(&a.gerst_bracket(&c).unwrap()).unwrap();
        let second = if twisted(a.arity(), b.arity()) { second.neg() } else { second };
        ensure!(lhs == first.checked_add(&second).unwrap(), "case {case}: graded Jacobi fails");
    }
    Ok(format!("{cases} random cases, dim ≤ 4, arity ≤ 2, order ≤ 2"))
}

fn canonical(dim: usize) -> Polyvector {
    let half = dim / 2;
    let entries: Vec<_> = (0..half).map(|i| (i, i + half, Polynomial::one(dim))).collect();
    Polyvector::bivector(dim, &entries).unwrap()
}

fn moyal_correctness() -> Outcome {
    for dim in [2, 4] {
        let s = StarProduct::moyal(&canonical(dim), 4).unwrap();
        for k in 1..=4 {
            ensure!(s.assoc_residual(k).unwrap().is_zero(), "dim {dim}: R_{k} ≠ 0");
        }
        let half = dim / 2;
        let x = Polynomial::var(dim, 0);
        let p = Polynomial::var(dim, half);
        let zero = Polynomial::zero(dim);
        let hbar = TruncatedSeries::new(vec![zero.clone(), Polynomial::one(dim), zero.clone(), zero.clone(), zero.clone()]);
        ensure!(s.commutator(&x, &p).unwrap() == hbar, "dim {dim}: x∗p − p∗x ≠ ℏ");
        let h = (&(&x * &x) + &(&p * &p)).scale(&deformq::poly::qf(1, 2));
        let expected = TruncatedSeries::new(vec![
            &h * &h,
            zero.clone(),
            Polynomial::constant(dim, deformq::poly::qf(1, 4)),
            zero.clone(),
            zero.clone(),
        ]);
        ensure!(s.eval(&h, &h).unwrap() == expected, "dim {dim}: H∗H ≠ H² + ℏ²/4");
    }
    Ok("dims 2 and 4 to order 4; x∗p − p∗x = ℏ; H∗H = H² + ℏ²/4".into())
}

/// `Σ_{k+l=n} B_k(B_l(a,b),c) − B_k(a,B_l(b,c))` over `k, l ≥ 1`, built by insertion.
fn composed_rhs(s: &StarProduct, n: usize) -> PolyDiffOp {
    let mut out = PolyDiffOp::zero(s.dim(), 3);
    for k in 1..n {
        let (bk, bl) = (s.term(k).unwrap(), s.term(n - k).unwrap());
        out = out
            .checked_add(&bk.compose_at(0, bl).unwrap())
            .unwrap()
            .checked_sub(&bk.compose_at(1, bl).unwrap())
            .unwrap();
    }
    out
}

fn cocycle_equations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for dim in [2, 4] {
        let s = StarProduct::moyal(&canonical(dim), 3).unwrap();
        let all: Vec<usize> = (0..dim).collect();
        for n in 1..=3 {
            let lhs = s.term(n).unwrap().hochschild_d();
            let rhs = composed_rhs(&s, n);
            ensure!(lhs == rhs, "dim {dim}: cocycle equation fails at order {n}");
            for _ in 0..5 {
                let args: Vec<Polynomial> = (0..3).map(|_| random_poly(&mut rng, dim, &all, 3)).collect();
                let (a, b, c) = (&args[0], &args[1], &args[2]);
                let bn = s.term(n).unwrap();
                let direct = &(&(&(a * &bn.apply(&[b.clone(), c.clone()]).unwrap())
                    - &bn.apply(&[a * b, c.clone()]).unwrap())
                    + &bn.apply(&[a.clone(), b * c]).unwrap())
                    - &(&bn.apply(&[a.clone(), b.clone()]).unwrap() * c);
                let mut expected = Polynomial::zero(dim);
                for k in 1..n {
                    let (bk, bl) = (s.term(k).unwrap(), s.term(n - k).unwrap());
                    let left = bk.apply(&[bl.apply(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
                    let right = bk.apply(&[a.clone(), bl.apply(&[b.clone(), c.clone()]).unwrap()]).unwrap();
                    expected = &(&expected + &left) - &right;
                }
                ensure!(direct == expected, "dim {dim}: pointwise cocycle check fails at order {n}");
            }
        }
    }
    Ok("dB_1 = 0, dB_2 and dB_3 match composed B_k∘B_l; dims 2, 4; also pointwise".into())
}

fn schouten_hkr() -> Outcome {
    let n3 = names(&["x", "y", "z"]);
    let so3 = Polyvector::bivector(
        3,
        &[(0, 1, poly("z", &n3)), (1, 2, poly("x", &n3)), (2, 0, poly("y", &n3))],
    )
    .unwrap();
    for (label, pi) in [("canonical R²", canonical(2)), ("canonical R⁴", canonical(4)), ("so(3)", so3)] {
        ensure!(jacobi_check(&pi).unwrap().is_poisson, "{label} rejected");
    }
    let bad = Polyvector::bivector(3, &[(0, 1, poly("z", &n3)), (1, 2, poly("y", &n3))]).unwrap();
    let check = jacobi_check(&bad).unwrap();
    ensure!(!check.is_poisson && !check.witness.is_zero(), "non-Poisson bivector accepted");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs = 60;
    for case in 0..pairs {
        let dim = rng.gen_range(1..=3);
        let all: Vec<usize> = (0..dim).collect();
        let xs: Vec<_> = (0..dim).map(|_| random_poly(&mut rng, dim, &all, 2)).collect();
        let ys: Vec<_> = (0..dim).map(|_| random_poly(&mut rng, dim, &all, 2)).collect();
        let x = Polyvector::vector_field(xs.clone());
        let y = Polyvector::vector_field(ys.clone());
        let via_schouten = hkr_to_cochain(&x.schouten(&y).unwrap());
        let via_gerst = hkr_to_cochain(&x).gerst_bracket(&hkr_to_cochain(&y)).unwrap();
        ensure!(via_schouten == via_gerst, "pair {case}: hkr does not intertwine brackets");
        ensure!(via_gerst == PolyDiffOp::vector_field(&xs).gerst_bracket(&PolyDiffOp::vector_field(&ys)).unwrap(),
            "pair {case}: hkr of a vector field is not the derivation");
    }
    Ok(format!("Jacobi on canonical and so(3), non-Poisson witness found; {pairs} vector-field pairs"))
}

fn random_class(rng: &mut ChaCha8Rng, sys: &IntegrableSystem, degree: usize) -> RelativeClass {
    let dim = sys.dim();
    let all: Vec<usize> = (0..dim).collect();
    let comps: Vec<_> = (0..sys.size())
        .combinations(degree)
        .map(|idx| (idx, random_poly(rng, dim, &all, 2)))
        .collect();
    RelativeClass::from_components(dim, sys.size(), degree, comps).unwrap()
}

fn relative_complex() -> Outcome {
    let n4 = names(&["x1", "x2", "p1", "p2"]);
    let n3 = names(&["x", "y", "z"]);
    let so3 = Polyvector::bivector(
        3,
        &[(0, 1, poly("z", &n3)), (1, 2, poly("x", &n3)), (2, 0, poly("y", &n3))],
    )
    .unwrap();
    let systems = [
        ("canonical R⁴", IntegrableSystem::validated(canonical(4), vec![poly("p1", &n4), poly("p2", &n4)], 0).unwrap()),
        ("so(3)", IntegrableSystem::validated(so3, vec![poly("x^2 + y^2 + z^2", &n3), poly("z", &n3)], 0).unwrap()),
        ("removable", removable().1),
        ("obstructed", obstructed().1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let per_system = 60;
    for (label, sys) in &systems {
        for case in 0..per_system {
            let c = random_class(&mut rng, sys, case % 2);
            ensure!(
                d_hor(sys, &d_hor(sys, &c).unwrap()).unwrap().is_zero(),
                "{label} case {case}: d_hor² ≠ 0"
            );
        }
    }
    let sys = &systems[0].1;
    let x1 = RelativeClass::from_components(4, 2, 0, [(vec![], poly("x1", &n4))]).unwrap();
    let expected = RelativeClass::from_components(4, 2, 1, [(vec![0], Polynomial::from_int(4, -1))]).unwrap();
    ensure!(d_hor(sys, &x1).unwrap() == expected, "d_hor(x1⊗1) ≠ −1⊗e_1");
    let two = RelativeClass::from_components(4, 2, 2, [(vec![0, 1], Polynomial::from_int(4, 2))]).unwrap();
    ensure!(d_hor(sys, &two).unwrap().is_zero(), "d_hor(2⊗e_1∧e_2) ≠ 0");
    Ok(format!("{per_system} classes of degree ≤ 1 on each of {} systems; d_hor(x1⊗1) = −1⊗e_1", systems.len()))
}

/// `D(a) ∗ D(b) = D(ab)` on generator monomials of degree ≤ 2.
fn independently_commutative(s: &StarProduct, d: &deformq::FormalDiffeo, sys: &IntegrableSystem) -> bool {
    let mono = generator_monomials(sys.generators(), sys.dim(), 2);
    mono.iter().cartesian_product(mono.iter()).all(|((_, a), (_, b))| {
        s.eval_series(&d.apply(a).unwrap(), &d.apply(b).unwrap()).unwrap() == d.apply(&(a * b)).unwrap()
    })
}

fn pipeline_scenarios() -> Outcome {
    let (s, sys) = casimir_r3(2);
    let r = eliminate_to_order(&s, &sys, 2, Bounds::default(), Exec::default()).map_err(|e| e.to_string())?;
    ensure!(r.status == Status::Trivialized && r.gauge.is_identity(), "(a) expected TRIVIALIZED with identity gauge");

    let (s, sys) = removable();
    let r = eliminate_to_order(&s, &sys, 2, Bounds::default(), Exec::default()).map_err(|e| e.to_string())?;
    ensure!(r.status == Status::Trivialized, "(b) status {:?}", r.status);
    ensure!(!r.gauge.is_identity(), "(b) gauge is the identity");
    let recomputed = gauge_transform(&s, &r.gauge).unwrap();
    ensure!(recomputed == r.transformed, "(b) transformed star does not match the gauge");
    for b in recomputed.terms() {
        ensure!(
            restricted_values(b, &sys, b.order() + 1, Exec::Sequential).unwrap().is_all_zero(),
            "(b) restricted table not zero"
        );
    }
    ensure!(independently_commutative(&s, &r.gauge, &sys), "(b) D(a)∗D(b) ≠ D(ab) on C");

    let (s, sys) = obstructed();
    let r = eliminate_to_order(&s, &sys, 2, Bounds::default(), Exec::default()).map_err(|e| e.to_string())?;
    ensure!(r.status == Status::Obstructed, "(c) status {:?}", r.status);
    let two = RelativeClass::from_components(4, 2, 2, [(vec![0, 1], Polynomial::from_int(4, 2))]).unwrap();
    ensure!(r.classes().last() == Some(&two), "(c) χ_2 ≠ 2e_1∧e_2");
    let cert = r.steps.iter().find_map(|st| match &st.action {
        deformq::obstruction::StepAction::Obstructed(c) => Some(c.clone()),
        _ => None,
    });
    ensure!(cert.as_ref().is_some_and(|c| c.zero_image), "(c) no zero-image certificate");
    ensure!(
        deformq::obstruction::verify_exactness_certificate(&sys, &two, &cert.unwrap()).unwrap(),
        "(c) certificate does not verify"
    );
    Ok("Casimir C trivial; removable gauged and audited; obstructed with zero-image certificate".into())
}

fn gauge_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n3 = names(&["x", "y", "z"]);
    let n4 = names(&["x1", "x2", "p1", "p2"]);
    let (rem, rem_sys) = removable();
    let rem_star = eliminate_to_order(&rem, &rem_sys, 2, Bounds::default(), Exec::default())
        .map_err(|e| e.to_string())?
        .transformed;
    let pi3 = Polyvector::basis(3, &[0, 1]).unwrap();
    let nonlinear = IntegrableSystem::validated(pi3, vec![poly("y + z^2", &n3), poly("y*z + z", &n3)], 0).unwrap();
    let r4_sys = IntegrableSystem::validated(canonical(4), vec![poly("p1", &n4), poly("p2^2 + p1", &n4)], 0).unwrap();
    // (star, system, variables of C)
    let setups: Vec<(StarProduct, IntegrableSystem, Vec<usize>)> = vec![
        (casimir_r3(3).0, casimir_r3(3).1, vec![1, 2]),
        (casimir_r3(3).0, nonlinear, vec![1, 2]),
        (StarProduct::moyal(&canonical(4), 3).unwrap(), r4_sys, vec![2, 3]),
        (rem_star, rem_sys, vec![1, 2]),
    ];
    let trials = 10;
    for trial in 0..trials {
        let (s, sys, vars) = &setups[trial % setups.len()];
        ensure!(independently_commutative(s, &deformq::FormalDiffeo::identity(s.dim(), s.order()), sys),
            "trial {trial}: base star not commutative on C");
        let d = random_preserving_diffeo(&mut rng, s.dim(), vars, s.order());
        let transformed = gauge_transform(s, &d).unwrap();
        let f = sys.generators();
        for (i, j) in (0..f.len()).tuple_combinations() {
            let brute = conjugated_commutator(s, &d, &f[i], &f[j]);
            ensure!(brute.coeffs().iter().all(|c| c.is_zero()), "trial {trial}: D f_i ∗ D f_j not commutative");
            ensure!(transformed.commutator(&f[i], &f[j]).unwrap().coeffs().iter().all(|c| c.is_zero()),
                "trial {trial}: transformed commutator nonzero");
        }
        for n in 1..=s.order() {
            ensure!(commutator_class(&transformed, sys, n).unwrap().is_zero(), "trial {trial}: χ_{n} ≠ 0");
        }
    }
    Ok(format!("{trials} random C-preserving gauges; χ_n = 0 for n ≤ 3, brute-force commutators zero"))
}

fn extension_checks() -> Outcome {
    let mut solved = 0;
    for dim in [2, 4] {
        let moyal = StarProduct::moyal(&canonical(dim), 3).unwrap();
        for n in 1..=2 {
            let s = moyal.truncate(n).unwrap();
            ensure!(satisfies_constraint(&s, &moyal.terms()[n]).unwrap(), "dim {dim}: Moyal B_{} rejected", n + 1);
            if dim == 4 && n == 2 {
                continue;
            }
            let bounds = Bounds { degree: 0, op_order: n as u32 + 1 };
            match extend_one_order(&s, bounds, Exec::default()).map_err(|e| e.to_string())? {
                Extension::Found { particular, .. } => {
                    ensure!(satisfies_constraint(&s, &particular).unwrap(), "dim {dim}: solution fails constraint");
                    ensure!(
                        s.extended(particular).unwrap().certified_order() == n + 1,
                        "dim {dim}: extended star not associative"
                    );
                    solved += 1;
                }
                Extension::Undecided { .. } => return Err(format!("dim {dim}: no extension at order {}", n + 1)),
            }
        }
    }
    let (s, _) = removable();
    match extend_one_order(&s, Bounds { degree: 0, op_order: 3 }, Exec::default()).map_err(|e| e.to_string())? {
        Extension::Found { particular, .. } => {
            ensure!(satisfies_constraint(&s, &particular).unwrap(), "removable: solution fails constraint");
            solved += 1;
        }
        Extension::Undecided { .. } => {}
    }
    Ok(format!("{solved} extensions pass the residual check; Moyal B_2, B_3 accepted as candidates"))
}

fn cli_determinism() -> Outcome {
    for (name, problem, command, extra) in GOLDEN_CASES {
        let path = problem_path(problem);
        let run = || {
            let out = Process::new(env!("CARGO_BIN_EXE_deformq"))
                .args(["--problem", path.to_str().unwrap(), "--command", command])
                .args(*extra)
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!("{name}: exit {:?}", out.status.code()));
            }
            Ok(out.stdout)
        };
        let (first, second) = (run()?, run()?);
        ensure!(first == second, "{name}: runs differ");
        let golden = std::fs::read(golden_path(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(first == golden, "{name}: differs from golden file");
    }
    Ok(format!("{} golden reports reproduced byte-for-byte twice", GOLDEN_CASES.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 Hochschild identities", hochschild_identities),
        ("2 Moyal correctness", moyal_correctness),
        ("3 cocycle equations", cocycle_equations),
        ("4 Schouten and HKR", schouten_hkr),
        ("5 relative complex", relative_complex),
        ("6 obstruction pipeline", pipeline_scenarios),
        ("7 gauge invariance", gauge_invariance),
        ("8 one-order extension", extension_checks),
        ("9 CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (label, check) in criteria {
        let start = std::time::Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {label}: {detail} ({secs:.2}s)"),
            Err(reason) => {
                failed += 1;
                println!("[FAIL] {label}: {reason} ({secs:.2}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
