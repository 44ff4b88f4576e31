//! Perturbation operators from point geometry, the resolvent recursion for the first two
//! expansion coefficients, their closed forms, and an independent matrix oracle.

mod closed;
mod geometry;
mod operators;
pub mod oracle;
mod recursion;

pub use closed::phi_coefficients_closed;
pub use geometry::{CurvatureE, D2LogH, DLogH, MuE, PointGeometry, Tensor3, Tensor4, TorsionMix};
pub use operators::{build_o1, build_o2_fully_normal};
pub use oracle::{brute_force_coefficient, BruteForceKernel};
pub use recursion::{compute_coefficients, expansion_coefficient, phi1_numeric, CoefficientResult};
