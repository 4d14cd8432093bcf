//! Exact computations for deformation quantization of integrable systems:
//! rational polynomials, polyvector fields, polydifferential Hochschild
//! cochains, truncated star products, and the order-by-order elimination of
//! star commutators on a Poisson-commutative subalgebra.

pub mod cli;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod multivec;
pub mod obstruction;
pub mod poly;
pub mod polydiff;
pub mod series;
pub mod star;

pub use error::{Error, Result};
pub use exec::Exec;
pub use multivec::{d_hor, d_pi, hamiltonian_field, hkr_to_cochain, jacobi_check, poisson_bracket, Polyvector, RelativeClass};
pub use obstruction::{
    commutator_class, eliminate_to_order, exactness_solve, obstruction_class, IntegrableSystem,
    ObstructionReport, Status,
};
pub use poly::{Exponents, Polynomial, Q};
pub use polydiff::{restricted_values, PolyDiffOp};
pub use series::TruncatedSeries;
pub use star::{extend_one_order, gauge_transform, Bounds, FormalDiffeo, StarProduct};
