//! Ladder-operator algebra of the model operator.
//!
//! Kernels are stored as `q(Z, Z') P(Z, Z')` with `P` the Gaussian kernel of the
//! projection onto the model kernel; operators are normal-ordered ladder words. The
//! spectral decomposition rewrites any kernel as a sum of eigenvectors
//! `b^alpha bperp^gamma (f P)`, which gives projection and resolvents in closed form.

mod eigen;
mod kernel;
mod ladder;
mod params;
mod poly;

pub use eigen::{project_and_resolve, to_eigen_form, EigenForm, SpectralMode};
pub use kernel::{apply_to_kernel, gaussian_moment_integrate, model_kernel, IntegrationDomain, KVar, KernelPolynomial, ModelPoint};
pub use ladder::{model_operator, normal_order, AlgebraSettings, LadderPolynomial, Letter};
pub use params::ModelParams;
pub use poly::Poly;

