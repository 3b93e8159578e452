//! Finite-difference Dirichlet solver for the complex mixed Hessian equation
//!
//! σ_k(λ(χ_u))/σ_{k−1}(λ(χ_u)) − Σ_{l=0}^{k−2} β_l σ_l(λ(χ_u))/σ_{k−1}(λ(χ_u)) = β
//!
//! on boxes in C^n, with χ_u = χ_0 + ∂∂̄u, solved by damped Newton inside a
//! continuity method started from an admissible subsolution.

pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod oracle;
pub mod problems;
pub mod solver;
pub mod spectral;
pub mod symfun;

pub use error::{HmixError, Result};
pub use geometry::{GridFunction, GridSpec, HermitianField};
pub use operator::Coefficients;
pub use problems::{Descriptor, ManufacturedProblem, ProblemConfig, ProblemSpec};
pub use solver::{continuity_solve, Solution, SolveReport, SolverConfig};
pub use spectral::HermitianMatrix;
pub use symfun::Spectrum;
