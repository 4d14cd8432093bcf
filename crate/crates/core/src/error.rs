use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("expected a polyvector of degree {expected}, got degree {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("expected {expected} argument(s), got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("truncation order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("order {order} out of range (available up to {max})")]
    OrderOutOfRange { order: usize, max: usize },
    #[error("bivector is not Poisson: [pi,pi] = {0}")]
    NotPoisson(String),
    #[error("Moyal construction needs a constant bivector; component {0:?} is not constant")]
    NonConstantBivector(Vec<usize>),
    #[error("cannot insert into a cochain of arity 0")]
    ZeroArityComposition,
    #[error("system size mismatch: expected {expected} generators, got {found}")]
    SystemSizeMismatch { expected: usize, found: usize },
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("class is not closed: {0}")]
    NotClosed(String),
    #[error("internal check failed: {0}")]
    InternalCheck(String),
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a, b))
    }
}
