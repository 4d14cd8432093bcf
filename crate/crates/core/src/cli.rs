//! Problem files, command dispatch and JSON reports for the `deformq` binary.
//!
//! Output is deterministic: maps are `BTreeMap`s and lists keep a fixed order.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::exec::Exec;
use crate::multivec::{jacobi_check, Polyvector, RelativeClass};
use crate::obstruction::{
    bracket_normalization, cocycle_cascade_check, eliminate_to_order, exactness_solve,
    obstruction_class, Exactness, ExactnessCertificate, IntegrableSystem, Status, StepAction,
    ValidationReport,
};
use crate::poly::{fmt_q, Exponents, Polynomial};
use crate::polydiff::{values_on_monomials, PolyDiffOp, TableEntry};
use crate::star::{extend_one_order, gauge_transform, Bounds, Extension, FormalDiffeo, StarProduct};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("invalid JSON at line {line}, column {column}: {msg}")]
    Json {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{field}: {msg}")]
    Field { field: String, msg: String },
    #[error("invalid system: {0}")]
    Validation(String),
    #[error("unknown command '{0}' (expected one of check-poisson, assoc-check, commutator-table, obstruction, eliminate, extend-star)")]
    UnknownCommand(String),
    #[error(transparent)]
    Domain(#[from] Error),
}

impl CliError {
    /// 1 for bad input or unmet preconditions, 2 for a failed internal check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(Error::InternalCheck(_)) => 2,
            _ => 1,
        }
    }

    fn field(field: impl Into<String>, msg: impl fmt::Display) -> Self {
        CliError::Field {
            field: field.into(),
            msg: msg.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// A coordinate given by 0-based position or by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonEntry {
    pub i: CoordRef,
    pub j: CoordRef,
    pub coefficient: String,
}

/// One term `coefficient · ∂^{slot_1} ⊗ … ⊗ ∂^{slot_k}`; each slot lists
/// coordinate names, repeated for higher powers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpTerm {
    pub coefficient: String,
    pub derivatives: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarTerm {
    pub order: usize,
    pub coefficient: String,
    pub derivatives: Vec<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StarKind {
    /// Moyal product of the (constant) Poisson bivector, plus `terms`.
    Moyal,
    /// Exactly the listed `terms`.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarSpec {
    pub kind: StarKind,
    pub order: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<StarTerm>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Default for `--order`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Triple of polynomials on which `assoc-check` evaluates every residual.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Vec<String>>,
}

impl Params {
    fn is_empty(&self) -> bool {
        *self == Params::default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: usize,
    pub coordinates: Vec<String>,
    #[serde(default)]
    pub poisson: Vec<PoissonEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star: Option<StarSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
}

impl ProblemFile {
    pub fn from_json(src: &str) -> CliResult<Self> {
        serde_json::from_str(src).map_err(|e| CliError::Json {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problem files serialize");
        s.push('\n');
        s
    }
}

/// A problem file together with the domain objects it describes.
#[derive(Clone, Debug)]
pub struct LoadedProblem {
    pub file: ProblemFile,
    pub names: Vec<String>,
    pub pi: Polyvector,
    pub star: Option<StarProduct>,
    pub system: Option<IntegrableSystem>,
    pub validation: Option<ValidationReport>,
}

fn parse_poly(src: &str, names: &[String], field: &str) -> CliResult<Polynomial> {
    Polynomial::parse(src, names).map_err(|e| CliError::field(field, e))
}

fn coord_index(r: &CoordRef, names: &[String], field: &str) -> CliResult<usize> {
    match r {
        CoordRef::Index(i) if *i < names.len() => Ok(*i),
        CoordRef::Index(i) => Err(CliError::field(
            field,
            format!("index {i} out of range for dimension {}", names.len()),
        )),
        CoordRef::Name(n) => names
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| CliError::field(field, format!("unknown coordinate '{n}'"))),
    }
}

fn parse_slots(slots: &[Vec<String>], names: &[String], field: &str) -> CliResult<Vec<Exponents>> {
    slots
        .iter()
        .enumerate()
        .map(|(s, slot)| {
            let mut e = vec![0u32; names.len()];
            for n in slot {
                let i = coord_index(&CoordRef::Name(n.clone()), names, &format!("{field}.derivatives[{s}]"))?;
                e[i] += 1;
            }
            Ok(Exponents::new(e))
        })
        .collect()
}

/// Reads an operator of the given arity from report/problem terms.
pub fn terms_to_op(terms: &[OpTerm], names: &[String], arity: usize, field: &str) -> CliResult<PolyDiffOp> {
    let mut parsed = Vec::with_capacity(terms.len());
    for (t, term) in terms.iter().enumerate() {
        let f = format!("{field}[{t}]");
        if term.derivatives.len() != arity {
            return Err(CliError::field(
                &f,
                format!("expected {arity} derivative slots, got {}", term.derivatives.len()),
            ));
        }
        let c = parse_poly(&term.coefficient, names, &format!("{f}.coefficient"))?;
        parsed.push((c, parse_slots(&term.derivatives, names, &f)?));
    }
    Ok(PolyDiffOp::from_terms(names.len(), arity, parsed)?)
}

pub fn op_to_terms(op: &PolyDiffOp, names: &[String]) -> Vec<OpTerm> {
    op.terms()
        .map(|(slots, c)| OpTerm {
            coefficient: c.to_string_with(names),
            derivatives: slots
                .iter()
                .map(|a| {
                    a.as_slice()
                        .iter()
                        .enumerate()
                        .flat_map(|(i, &k)| std::iter::repeat_n(names[i].clone(), k as usize))
                        .collect()
                })
                .collect(),
        })
        .collect()
}

fn build_star(spec: &StarSpec, pi: &Polyvector, names: &[String]) -> CliResult<StarProduct> {
    let dim = names.len();
    let mut terms = match spec.kind {
        StarKind::Moyal => StarProduct::moyal(pi, spec.order)
            .map_err(|e| CliError::field("star", e))?
            .terms()
            .to_vec(),
        StarKind::Explicit => vec![PolyDiffOp::zero(dim, 2); spec.order],
    };
    for (t, term) in spec.terms.iter().enumerate() {
        let field = format!("star.terms[{t}]");
        if term.order == 0 || term.order > spec.order {
            return Err(CliError::field(
                field,
                format!("order {} outside 1..={}", term.order, spec.order),
            ));
        }
        let op = terms_to_op(
            &[OpTerm {
                coefficient: term.coefficient.clone(),
                derivatives: term.derivatives.clone(),
            }],
            names,
            2,
            &field,
        )
        .map_err(|e| match e {
            CliError::Field { msg, .. } => CliError::field(&field, msg),
            other => other,
        })?;
        terms[term.order - 1] = terms[term.order - 1].checked_add(&op)?;
    }
    Ok(StarProduct::new(dim, terms)?)
}

/// Parses and validates a problem. Generators, when present, must pass
/// [`IntegrableSystem::validate`].
pub fn load_problem_str(src: &str) -> CliResult<LoadedProblem> {
    let file = ProblemFile::from_json(src)?;
    let dim = file.dimension;
    if file.coordinates.len() != dim {
        return Err(CliError::field(
            "coordinates",
            format!("{} names for dimension {dim}", file.coordinates.len()),
        ));
    }
    let names = file.coordinates.clone();
    for (k, n) in names.iter().enumerate() {
        let ok = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok || names[..k].contains(n) {
            return Err(CliError::field(format!("coordinates[{k}]"), format!("invalid or repeated name '{n}'")));
        }
    }
    let mut entries = Vec::new();
    for (k, e) in file.poisson.iter().enumerate() {
        let f = format!("poisson[{k}]");
        let i = coord_index(&e.i, &names, &format!("{f}.i"))?;
        let j = coord_index(&e.j, &names, &format!("{f}.j"))?;
        if i == j {
            return Err(CliError::field(f, "a bivector has no diagonal entries"));
        }
        entries.push((i, j, parse_poly(&e.coefficient, &names, &format!("{f}.coefficient"))?));
    }
    let pi = Polyvector::bivector(dim, &entries)?;
    let star = file
        .star
        .as_ref()
        .map(|spec| build_star(spec, &pi, &names))
        .transpose()?;
    let (system, validation) = if file.generators.is_empty() {
        (None, None)
    } else {
        let gens = file
            .generators
            .iter()
            .enumerate()
            .map(|(k, g)| parse_poly(g, &names, &format!("generators[{k}]")))
            .collect::<CliResult<Vec<_>>>()?;
        let sys = IntegrableSystem::new(pi.clone(), gens).map_err(|e| CliError::field("generators", e))?;
        let report = sys.validate(file.seed.unwrap_or(0))?;
        if !report.is_valid() {
            return Err(CliError::Validation(report.failures(&sys, &names).join("; ")));
        }
        (Some(sys), Some(report))
    };
    Ok(LoadedProblem {
        file,
        names,
        pi,
        star,
        system,
        validation,
    })
}

pub fn load_problem(path: &Path) -> CliResult<LoadedProblem> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    load_problem_str(&src)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CheckPoisson,
    AssocCheck,
    CommutatorTable,
    Obstruction,
    Eliminate,
    ExtendStar,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckPoisson => "check-poisson",
            Command::AssocCheck => "assoc-check",
            Command::CommutatorTable => "commutator-table",
            Command::Obstruction => "obstruction",
            Command::Eliminate => "eliminate",
            Command::ExtendStar => "extend-star",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "check-poisson" => Command::CheckPoisson,
            "assoc-check" => Command::AssocCheck,
            "commutator-table" => Command::CommutatorTable,
            "obstruction" => Command::Obstruction,
            "eliminate" => Command::Eliminate,
            "extend-star" => Command::ExtendStar,
            other => return Err(CliError::UnknownCommand(other.to_string())),
        })
    }
}

/// Command-line overrides of the problem file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub order: Option<usize>,
    pub degree_bound: Option<u32>,
    pub op_order_bound: Option<u32>,
    pub seed: Option<u64>,
    pub exec: Exec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub args: Vec<String>,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoissonResult {
    pub poisson: bool,
    pub summary: String,
    /// Components of `[π, π]` keyed by coordinate tuples.
    pub jacobi_witness: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub order: usize,
    pub zero: bool,
    pub terms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssocResult {
    pub order: usize,
    pub certified_order: usize,
    pub residuals: Vec<ResidualEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommutatorEntry {
    pub pair: String,
    pub generators: Vec<String>,
    /// Coefficients of `ℏ^0..ℏ^N` in `f_i ∗ f_j − f_j ∗ f_i`.
    pub coefficients: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommutatorResult {
    pub order: usize,
    pub pairs: Vec<CommutatorEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateWeight {
    pub component: String,
    pub monomial: String,
    pub weight: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub degree_bound: u32,
    pub zero_image: bool,
    pub weights: Vec<CertificateWeight>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactnessJson {
    /// `exact` or `infeasible`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionResult {
    pub order: usize,
    pub class: BTreeMap<String, String>,
    pub closed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle_witness: Option<Witness>,
    pub exactness: ExactnessJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepJson {
    pub order: usize,
    pub class: BTreeMap<String, String>,
    /// `already-vanishing`, `gauged`, `obstructed` or `undecided`.
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_n: Option<Vec<OpTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationResult {
    pub status: Status,
    pub order: usize,
    pub order_reached: usize,
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<String>,
    pub steps: Vec<StepJson>,
    /// `D_1..D_N` of the accumulated gauge `id + Σ ℏ^k D_k`.
    pub gauge: Vec<Vec<OpTerm>>,
    /// `B′_1..B′_N` of the transformed star.
    pub transformed: Vec<Vec<OpTerm>>,
    /// Whether the final independent audit ran (only for `TRIVIALIZED`).
    pub audited: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionResult {
    pub order: usize,
    /// `found` or `undecided`.
    pub status: String,
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particular: Option<Vec<OpTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle_dimension: Option<usize>,
    pub residual_check: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CommandResult {
    CheckPoisson(PoissonResult),
    AssocCheck(AssocResult),
    CommutatorTable(CommutatorResult),
    Obstruction(ObstructionResult),
    Eliminate(EliminationResult),
    ExtendStar(ExtensionResult),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub coordinates: Vec<String>,
    pub conventions: BTreeMap<String, String>,
    pub result: CommandResult,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(src: &str) -> CliResult<Self> {
        serde_json::from_str(src).map_err(|e| CliError::Json {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }
}

fn conventions() -> BTreeMap<String, String> {
    BTreeMap::from([
        (
            "formal_parameter".to_string(),
            "real: the Moyal exponent is (hbar/2) pi, i absorbed into hbar".to_string(),
        ),
        (
            "commutator".to_string(),
            "B_1(a,b) - B_1(b,a) = kappa {a,b}; built-in Moyal has kappa = 1".to_string(),
        ),
        (
            "class_keys".to_string(),
            "(i,j) are 1-based generator indices of e_i^e_j".to_string(),
        ),
    ])
}

fn pair_key(idx: &[usize]) -> String {
    format!("({})", idx.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","))
}

fn class_json(c: &RelativeClass, names: &[String]) -> BTreeMap<String, String> {
    c.labelled_components(names)
}

fn witness_json(w: &TableEntry, gens: &[Polynomial], names: &[String]) -> Witness {
    Witness {
        args: w
            .args
            .iter()
            .map(|beta| {
                let mut p = Polynomial::one(names.len());
                for (f, &k) in gens.iter().zip(beta.as_slice()) {
                    p = &p * &f.pow(k);
                }
                p.to_string_with(names)
            })
            .collect(),
        value: w.value.to_string_with(names),
    }
}

fn certificate_json(cert: &ExactnessCertificate, names: &[String]) -> CertificateJson {
    CertificateJson {
        degree_bound: cert.degree_bound,
        zero_image: cert.zero_image,
        weights: cert
            .weights
            .iter()
            .map(|((idx, mono), w)| CertificateWeight {
                component: pair_key(idx),
                monomial: Polynomial::monomial(names.len(), mono.clone(), num_traits::One::one())
                    .to_string_with(names),
                weight: fmt_q(w),
            })
            .collect(),
    }
}

fn star_or_err(p: &LoadedProblem) -> CliResult<&StarProduct> {
    p.star
        .as_ref()
        .ok_or_else(|| CliError::field("star", "this command needs a star product"))
}

fn system_or_err(p: &LoadedProblem) -> CliResult<&IntegrableSystem> {
    p.system
        .as_ref()
        .ok_or_else(|| CliError::field("generators", "this command needs generators"))
}

fn target_order(p: &LoadedProblem, o: &Overrides) -> CliResult<usize> {
    let s = star_or_err(p)?;
    let n = o.order.or(p.file.params.order).unwrap_or(s.order());
    if n > s.order() {
        return Err(Error::OrderOutOfRange {
            order: n,
            max: s.order(),
        }
        .into());
    }
    Ok(n)
}

fn bounds_of(p: &LoadedProblem, o: &Overrides) -> Bounds {
    let base = p.file.bounds.unwrap_or_default();
    Bounds {
        degree: o.degree_bound.unwrap_or(base.degree),
        op_order: o.op_order_bound.unwrap_or(base.op_order),
    }
}

/// First non-zero value of `op` on tuples of coordinate monomials, searching
/// slot degrees `1..=order(op)+1` in turn.
fn coordinate_witness(op: &PolyDiffOp, names: &[String], exec: Exec) -> CliResult<Option<Witness>> {
    let dim = names.len();
    let coords: Vec<Polynomial> = (0..dim).map(|i| Polynomial::var(dim, i)).collect();
    for d in 1..=op.order() + 1 {
        let table = values_on_monomials(op, &coords, d, exec)?;
        if let Some(w) = table.first_nonzero() {
            return Ok(Some(witness_json(w, &coords, names)));
        }
    }
    Ok(None)
}

fn run_assoc(p: &LoadedProblem, o: &Overrides) -> CliResult<AssocResult> {
    let s = star_or_err(p)?;
    let n = target_order(p, o)?;
    let probe = p
        .file
        .params
        .probe
        .as_ref()
        .map(|v| {
            if v.len() != 3 {
                return Err(CliError::field("params.probe", "expected three polynomials"));
            }
            v.iter()
                .enumerate()
                .map(|(k, t)| parse_poly(t, &p.names, &format!("params.probe[{k}]")))
                .collect::<CliResult<Vec<_>>>()
        })
        .transpose()?;
    let mut residuals = Vec::new();
    for k in 1..=n {
        let r = s.assoc_residual(k)?;
        let witness = if r.is_zero() {
            None
        } else {
            coordinate_witness(&r, &p.names, o.exec)?
        };
        let probe = probe
            .as_ref()
            .map(|args| -> CliResult<Witness> {
                Ok(Witness {
                    args: args.iter().map(|a| a.to_string_with(&p.names)).collect(),
                    value: r.apply(args)?.to_string_with(&p.names),
                })
            })
            .transpose()?;
        residuals.push(ResidualEntry {
            order: k,
            zero: r.is_zero(),
            terms: r.num_terms(),
            witness,
            probe,
        });
    }
    Ok(AssocResult {
        order: n,
        certified_order: s.certified_order().min(n),
        residuals,
    })
}

fn run_commutators(p: &LoadedProblem, o: &Overrides) -> CliResult<CommutatorResult> {
    let s = star_or_err(p)?.truncate(target_order(p, o)?)?;
    let sys = system_or_err(p)?;
    let f = sys.generators();
    let mut pairs = Vec::new();
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            let c = s.commutator(&f[i], &f[j])?;
            pairs.push(CommutatorEntry {
                pair: pair_key(&[i, j]),
                generators: vec![f[i].to_string_with(&p.names), f[j].to_string_with(&p.names)],
                coefficients: c.coeffs().iter().map(|v| v.to_string_with(&p.names)).collect(),
            });
        }
    }
    Ok(CommutatorResult {
        order: s.order(),
        pairs,
    })
}

fn run_obstruction(p: &LoadedProblem, o: &Overrides) -> CliResult<ObstructionResult> {
    let s = star_or_err(p)?;
    let sys = system_or_err(p)?;
    let n = target_order(p, o)?;
    if n == 0 {
        return Err(CliError::field("order", "the obstruction order must be at least 1"));
    }
    let chi = obstruction_class(s, sys, n, o.exec)?;
    let cascade = cocycle_cascade_check(s, sys, n, o.exec)?;
    let exactness = if cascade.d_hor.is_zero() {
        match exactness_solve(sys, &chi, bounds_of(p, o).degree, o.exec)? {
            Exactness::Exact(y) => ExactnessJson {
                status: "exact".into(),
                solution: Some(class_json(&y, &p.names)),
                certificate: None,
            },
            Exactness::Infeasible(cert) => ExactnessJson {
                status: "infeasible".into(),
                solution: None,
                certificate: Some(certificate_json(&cert, &p.names)),
            },
        }
    } else {
        ExactnessJson {
            status: "not-closed".into(),
            solution: None,
            certificate: None,
        }
    };
    Ok(ObstructionResult {
        order: n,
        class: class_json(&chi, &p.names),
        closed: cascade.is_closed(),
        cocycle_witness: cascade
            .cocycle_witness
            .as_ref()
            .map(|w| witness_json(w, sys.generators(), &p.names)),
        exactness,
    })
}

fn run_eliminate(p: &LoadedProblem, o: &Overrides) -> CliResult<EliminationResult> {
    let s = star_or_err(p)?;
    let sys = system_or_err(p)?;
    let n = target_order(p, o)?;
    let bounds = bounds_of(p, o);
    let report = eliminate_to_order(s, sys, n, bounds, o.exec)?;
    let kappa = if n >= 1 {
        bracket_normalization(s, sys.pi()).ok().map(|k| fmt_q(&k))
    } else {
        None
    };
    let steps = report
        .steps
        .iter()
        .map(|st| {
            let mut j = StepJson {
                order: st.order,
                class: class_json(&st.class, &p.names),
                action: String::new(),
                exact: None,
                lift: None,
                d_n: None,
                certificate: None,
                reason: None,
            };
            match &st.action {
                StepAction::AlreadyVanishing => j.action = "already-vanishing".into(),
                StepAction::Gauged { exact, lift, d_n } => {
                    j.action = "gauged".into();
                    j.exact = Some(class_json(exact, &p.names));
                    j.lift = lift.as_ref().map(|x| {
                        x.iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .map(|(i, c)| (p.names[i].clone(), c.to_string_with(&p.names)))
                            .collect()
                    });
                    j.d_n = Some(op_to_terms(d_n, &p.names));
                }
                StepAction::Obstructed(cert) => {
                    j.action = if report.status == Status::Obstructed {
                        "obstructed".into()
                    } else {
                        "undecided".into()
                    };
                    j.certificate = Some(certificate_json(cert, &p.names));
                }
                StepAction::Undecided(reason) => {
                    j.action = "undecided".into();
                    j.reason = Some(reason.clone());
                }
            }
            j
        })
        .collect();
    Ok(EliminationResult {
        status: report.status,
        order: n,
        order_reached: report.order_reached,
        bounds,
        kappa,
        steps,
        gauge: report.gauge.terms().iter().map(|d| op_to_terms(d, &p.names)).collect(),
        transformed: report
            .transformed
            .terms()
            .iter()
            .map(|b| op_to_terms(b, &p.names))
            .collect(),
        audited: report.status == Status::Trivialized,
    })
}

fn run_extend(p: &LoadedProblem, o: &Overrides) -> CliResult<ExtensionResult> {
    let s = star_or_err(p)?.truncate(target_order(p, o)?)?;
    let bounds = bounds_of(p, o);
    Ok(match extend_one_order(&s, bounds, o.exec)? {
        Extension::Found {
            particular,
            cocycles,
        } => ExtensionResult {
            order: s.order() + 1,
            status: "found".into(),
            bounds,
            residual_check: s.extended(particular.clone())?.certified_order() == s.order() + 1,
            particular: Some(op_to_terms(&particular, &p.names)),
            cocycle_dimension: Some(cocycles.len()),
        },
        Extension::Undecided { .. } => ExtensionResult {
            order: s.order() + 1,
            status: "undecided".into(),
            bounds,
            particular: None,
            cocycle_dimension: None,
            residual_check: false,
        },
    })
}

fn run_check_poisson(p: &LoadedProblem) -> CliResult<PoissonResult> {
    let check = jacobi_check(&p.pi)?;
    let jacobi_witness = check
        .witness
        .components()
        .map(|(idx, c)| {
            let key = format!(
                "({})",
                idx.iter().map(|&i| p.names[i].as_str()).collect::<Vec<_>>().join(",")
            );
            (key, c.to_string_with(&p.names))
        })
        .collect();
    Ok(PoissonResult {
        poisson: check.is_poisson,
        summary: format!("Poisson: {}", if check.is_poisson { "yes" } else { "no" }),
        jacobi_witness,
    })
}

pub fn run_command(command: Command, p: &LoadedProblem, o: &Overrides) -> CliResult<Report> {
    let result = match command {
        Command::CheckPoisson => CommandResult::CheckPoisson(run_check_poisson(p)?),
        Command::AssocCheck => CommandResult::AssocCheck(run_assoc(p, o)?),
        Command::CommutatorTable => CommandResult::CommutatorTable(run_commutators(p, o)?),
        Command::Obstruction => CommandResult::Obstruction(run_obstruction(p, o)?),
        Command::Eliminate => CommandResult::Eliminate(run_eliminate(p, o)?),
        Command::ExtendStar => CommandResult::ExtendStar(run_extend(p, o)?),
    };
    Ok(Report {
        command: command.name().to_string(),
        seed: o.seed.or(p.file.seed).unwrap_or(0),
        coordinates: p.names.clone(),
        conventions: conventions(),
        result,
    })
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &Report, path: Option<&Path>) -> CliResult<()> {
    let text = report.to_json();
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io {
                    path: "<stdout>".into(),
                    msg: e.to_string(),
                })
        }
    }
}

/// Re-applies the reported gauge to the problem's star and compares with
/// the reported transformed star.
pub fn check_gauge_round_trip(p: &LoadedProblem, report: &Report) -> CliResult<bool> {
    let CommandResult::Eliminate(e) = &report.result else {
        return Err(CliError::field("result", "not an elimination report"));
    };
    let s = star_or_err(p)?.truncate(e.order)?;
    let gauge = e
        .gauge
        .iter()
        .enumerate()
        .map(|(k, t)| terms_to_op(t, &p.names, 1, &format!("gauge[{k}]")))
        .collect::<CliResult<Vec<_>>>()?;
    let transformed = e
        .transformed
        .iter()
        .enumerate()
        .map(|(k, t)| terms_to_op(t, &p.names, 2, &format!("transformed[{k}]")))
        .collect::<CliResult<Vec<_>>>()?;
    let d = FormalDiffeo::new(p.names.len(), gauge)?;
    let recomputed = gauge_transform(&s, &d)?;
    Ok(recomputed.terms() == transformed.as_slice())
}
