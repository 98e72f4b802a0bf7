//! Numerical search for regular crosspolytopes inscribed in smooth bodies.
//!
//! A crosspolytope with center `x`, scale `lambda`, rotation `rho` and base
//! frame `(e_1, ..., e_d)` has the `2d` vertices `x +- lambda rho e_i`. It is
//! inscribed when every vertex lies on the boundary `{f = 0}` of a level-set
//! body. The crate provides:
//!
//! * [`bodies`]: level-set bodies, ray intersection, JSON documents, homotopies;
//! * [`configuration`]: configurations, the level-set and chord residual maps
//!   and their Jacobians on `R^d x R x SO(d)`;
//! * [`solver`]: Levenberg-Marquardt zero finding, multi-start, homotopy
//!   continuation, solution-family sweeps and null-space dimension estimates;
//! * [`oracle`]: brute-force grid search in three dimensions;
//! * [`verify`]: audits of solutions and existence-guarantee classification.

pub mod bodies;
pub mod configuration;
pub mod error;
pub mod oracle;
pub mod solver;
pub mod verify;

pub use bodies::{BodyKind, HomotopyFamily, ImplicitBody};
pub use configuration::{BaseFrame, CrossConfig, ResidualForm, Rotation};
pub use error::{Error, Result};
pub use oracle::{brute_force_search, refine_candidates, GridSpec};
pub use solver::{
    continue_homotopy, gauss_newton, multistart_solve, numerical_nullity, sweep_family, ContinuationTrace, Provenance,
    Solution, SolveError, SolveOptions,
};
pub use verify::{check_equivariance, check_solution, classify_guarantee, Guarantee, VerificationReport};
