//! Model-operator calculus, coefficient recursion and exact projective kernels
//! for checking the asymptotics of circle-invariant Bergman kernels.
//!
//! The crate is organised by layer:
//!
//! * [`model`]: ladder-operator algebra acting on polynomial-times-Gaussian kernels.
//! * [`coefficients`]: the perturbation operators built from point geometry, the
//!   resolvent recursion for the first two expansion coefficients, closed forms and a
//!   matrix oracle.
//! * [`projective`]: monomial section spaces of CP^1 and CP^2 with exact norms.
//! * [`asymptotics`]: extrapolation and decay fits over exact kernel values.
//! * [`toeplitz`]: Toeplitz matrices, invariant Toeplitz values, isometry defect and
//!   commutator residuals.
//! * [`cli`]: the experiment registry behind the `bergman-lab` binary.

pub mod asymptotics;
pub mod cli;
pub mod coefficients;
pub mod error;
pub mod model;
pub mod numeric;
pub mod projective;
pub mod toeplitz;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
