//! Direct and iterative-splitting integrators for stochastic differential
//! equations with multiplicative noise.
//!
//! * [`linalg`]: small dense matrices and the matrix exponential.
//! * [`wiener`]: seeded Wiener paths, coarsening, Lévy-area pairs.
//! * [`problems`]: linear test systems and the Coulomb test-particle model.
//! * [`direct`]: Euler–Maruyama, Milstein, A-B and summative splitting, the
//!   exact linear map, and Coulomb EM/Milstein.
//! * [`iterative`]: iterative splitting for scalar and vectorial noise, and
//!   the Coulomb fixpoint and Taylor schemes.
//! * [`metrics`]: strong/weak errors, variance, time-averaged error, order fits.
//! * [`harness`]: the experiment runner behind the `splitsde` binary.

pub mod direct;
pub mod error;
pub mod harness;
pub mod iterative;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod wiener;

pub use direct::StepContext;
pub use error::{Error, Result};
pub use iterative::{C3Variant, IterConfig, QuadRule};
pub use linalg::DenseMatrix;
pub use problems::{CoulombProblem, CoulombState, LinearSdeProblem};
pub use wiener::WienerPath;
