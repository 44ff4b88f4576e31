use num_complex::Complex64 as C64;
use serde::Serialize;

use super::closed::phi_coefficients_closed;
use super::geometry::PointGeometry;
use super::operators::{build_o1, build_o2_fully_normal};
use crate::model::{
    apply_to_kernel, gaussian_moment_integrate, project_and_resolve, IntegrationDomain, KernelPolynomial, LadderPolynomial,
    ModelPoint, SpectralMode,
};
use crate::{Error, Result};

fn resolve(k: &KernelPolynomial, m: u32) -> Result<KernelPolynomial> {
    project_and_resolve(k, SpectralMode::Resolve(m))
}

fn check(o1: &LadderPolynomial, o2: Option<&LadderPolynomial>) -> Result<()> {
    if let Some(o2) = o2 {
        if o1.params() != o2.params() {
            return Err(Error::ParamMismatch);
        }
    }
    Ok(())
}

/// `R O1 P`, with `R` the resolvent on the complement of the model kernel.
fn first_leg(o1: &LadderPolynomial) -> Result<KernelPolynomial> {
    let p = KernelPolynomial::identity(o1.params()).with_settings(o1.settings());
    resolve(&apply_to_kernel(o1, &p)?, 1)
}

/// Coefficient kernel `P^(r)` for `r` in {1, 2}.
///
/// `r = 1`: `-R O1 P - P O1 R`. `r = 2`: the six-term resolvent formula, with the
/// adjoint halves obtained by kernel conjugation.
pub fn expansion_coefficient(r: u32, o1: &LadderPolynomial, o2: &LadderPolynomial) -> Result<KernelPolynomial> {
    check(o1, Some(o2))?;
    match r {
        1 => {
            let k1 = first_leg(o1)?;
            Ok(k1.add(&k1.adjoint())?.scale(C64::new(-1.0, 0.0)))
        }
        2 => {
            let params = o1.params();
            let p = KernelPolynomial::identity(params).with_settings(o1.settings());
            let k1 = first_leg(o1)?;
            // R O1 R O1 P
            let t1 = resolve(&apply_to_kernel(o1, &k1)?, 1)?;
            // -R O2 P
            let t2 = resolve(&apply_to_kernel(o2, &p)?, 1)?.scale(C64::new(-1.0, 0.0));
            // R O1 P O1 R
            let t5 = resolve(&apply_to_kernel(o1, &k1.adjoint())?, 1)?;
            // -P O1 R^2 O1 P
            let o1p = apply_to_kernel(o1, &p)?;
            let t6 = project_and_resolve(&apply_to_kernel(o1, &resolve(&o1p, 2)?)?, SpectralMode::Project)?
                .scale(C64::new(-1.0, 0.0));
            t1.add(&t1.adjoint())?.add(&t2)?.add(&t2.adjoint())?.add(&t5)?.add(&t6)
        }
        _ => Err(Error::InvalidArgument(format!("coefficient order {r} not in {{1, 2}}"))),
    }
}

/// Integral of `P^(2)(Z, Z)` over the normal slice.
pub fn phi1_numeric(o1: &LadderPolynomial, o2: &LadderPolynomial) -> Result<C64> {
    let p2 = expansion_coefficient(2, o1, o2)?;
    gaussian_moment_integrate(&p2, IntegrationDomain::DiagonalNormal)
}

/// Engine output side by side with the closed forms.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientResult {
    #[serde(skip)]
    pub p1: KernelPolynomial,
    #[serde(skip)]
    pub p2: KernelPolynomial,
    pub phi1_numeric: C64,
    pub phi1_closed: C64,
    pub p2_zero_engine: C64,
    pub p2_zero_closed: C64,
}

/// Builds both operators from `geom` (or takes `o2` as given) and evaluates everything.
pub fn compute_coefficients(geom: &PointGeometry, o2: Option<&LadderPolynomial>) -> Result<CoefficientResult> {
    let o1 = build_o1(geom)?;
    let o2 = match o2 {
        Some(o) => o.clone(),
        None => build_o2_fully_normal(geom)?,
    };
    check(&o1, Some(&o2))?;
    let p1 = expansion_coefficient(1, &o1, &o2)?;
    let p2 = expansion_coefficient(2, &o1, &o2)?;
    let phi1_numeric = gaussian_moment_integrate(&p2, IntegrationDomain::DiagonalNormal)?;
    let origin = ModelPoint::origin(&geom.params);
    let p2_zero_engine = p2.eval_at(&origin, &origin)?;
    let (phi1_closed, p2_zero_closed) = phi_coefficients_closed(geom)?;
    Ok(CoefficientResult { p1, p2, phi1_numeric, phi1_closed, p2_zero_engine, p2_zero_closed })
}
