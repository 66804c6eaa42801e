//! Numerical workbench for weighted Hardy-Cesaro averaging operators.
//!
//! The library evaluates the family of averaging operators
//!
//! ```text
//! (U f)(x) = integral over t in [0,1] of f(s(t) x) psi(t) dt
//! ```
//!
//! together with its Cesaro companion (extra Jacobian factor |s(t)|^n), an
//! infinite-horizon variant, the n-dimensional Hardy average on radial
//! functions, and commutators with a symbol b. It computes the operator-norm
//! constants of these operators on power-weighted Lebesgue and BMO spaces in
//! closed form where possible, and runs sweep experiments with extremal
//! function families that approach those constants empirically.
//!
//! Module map:
//! - [`quadrature`]: adaptive Gauss-Kronrod integration with endpoint
//!   singularity handling, improper integrals, seeded sphere Monte Carlo,
//!   and sequence extrapolation.
//! - [`weights`]: absolutely homogeneous weights, sphere constants, ball
//!   masses, doubling diagnostics.
//! - [`kernels`]: kernel and curve descriptors plus every closed-form norm
//!   constant (Lebesgue, Cesaro, BMO, commutator).
//! - [`functions`]: a small closed algebra of test functions with
//!   homogeneity metadata.
//! - [`spaces`]: weighted Lebesgue norms, BMO seminorm estimation over ball
//!   families, maximal averages.
//! - [`operators`]: pointwise operator application with exact breakpoint
//!   resolution.
//! - [`experiments`]: end-to-end sharpness, adjointness, BMO and commutator
//!   verifications producing reports.
//! - [`config`], [`report`], [`cli`]: batch front end.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod ext;
pub mod functions;
pub mod kernels;
pub mod operators;
pub mod quadrature;
pub mod report;
pub mod spaces;
pub mod weights;

mod exact;
mod parallel;
mod special;

pub use ext::ExtReal;
