//! Numerical laboratory for parabolic problems with a superlinear gradient source
//!
//! ```text
//!   u_t - div a(t, x, u, ∇u) = γ |∇u|^q + f     in (0,T) × Ω
//!   u = 0 on (0,T) × ∂Ω,   u(0) = u₀
//! ```
//!
//! The crate is split along four layers:
//!
//! * [`regime`]: exact arithmetic for the critical exponents and the regime
//!   classifier (which data spaces and which solution notion apply for given
//!   `N, p, q`).
//! * [`field`]: grids, discrete gradient/divergence pairs with exact
//!   summation by parts, truncations, Lebesgue/Bochner/Marcinkiewicz norms,
//!   the Gagliardo–Nirenberg checker and the estimate ledger.
//! * [`solver`]: backward Euler with damped Newton for the regularized
//!   p-Laplacian flux, truncated approximating problems, comparison runs and
//!   weak residuals.
//! * [`experiment`]: reproducible scenarios and probes built on top of the
//!   solver.

pub mod error;
pub mod experiment;
pub mod field;
pub mod regime;
pub mod solver;

pub use error::{Error, Result};
pub use field::{
    CoefficientMatrix, EstimateLedger, Field, Grid, GridMode, TerminationStatus, Trajectory,
    VectorField,
};
pub use regime::{
    classify, DataSpaceSpec, DerivedExponents, Exponent, ExtExponent, ProblemExponents, Regime,
    RegimeReport, SolutionNotion,
};
pub use solver::{Operator, RhsSpec, SolverConfig, SourceTreatment};
