use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::geometry::{get1, get2, get3, PointGeometry};
use crate::{Error, Result};

fn missing(name: &str) -> Error {
    Error::MissingField(name.to_string())
}

fn need<T>(name: &str, v: &[T], dim: usize) -> Result<()> {
    if dim > 0 && v.is_empty() {
        return Err(missing(name));
    }
    Ok(())
}

/// Horizontal scalar, defaulting to zero when there are no horizontal directions.
fn horizontal(name: &str, v: Option<f64>, nh: usize) -> Result<f64> {
    match v {
        Some(x) => Ok(x),
        None if nh == 0 => Ok(0.0),
        None => Err(missing(name)),
    }
}

/// Closed-form `(Phi_1, P^(2)(0, 0))` at a reduction point.
pub fn phi_coefficients_closed(geom: &PointGeometry) -> Result<(C64, C64)> {
    geom.validate()?;
    let p = &geom.params;
    let (nh, n0) = (p.nh(), p.n0);
    let r_xg = horizontal("rXG", geom.r_xg, nh)?;
    let lap = horizontal("d2logh.horizontal_laplacian", geom.d2logh.horizontal_laplacian, nh)?;
    let reg = horizontal("REB.horizontal_trace", geom.reb.horizontal_trace, nh)?;
    let phi1 = r_xg / (8.0 * PI) + 3.0 * lap / (4.0 * PI) + reg / (2.0 * PI);

    need("T3", &geom.t3, n0)?;
    need("Ttilde", &geom.ttilde, n0)?;
    need("muE.values", &geom.mu_e.values, n0)?;
    need("muE.grad", &geom.mu_e.grad, n0)?;
    need("dlogh.normal", &geom.dlogh.normal, n0)?;
    need("d2logh.normal", &geom.d2logh.normal, n0)?;
    need("dlogh.horizontal", &geom.dlogh.horizontal, nh)?;
    need("Tmix.dzb", &geom.tmix.dzb, nh * n0)?;
    need("Tmix.tH", &geom.tmix.t_h, nh * n0)?;

    let i = C64::i();
    let dl = |k| get1(&geom.dlogh.normal, k);
    let mu = |k| get1(&geom.mu_e.values, k);
    let th = |a, b, k| get3(&geom.tmix.t_h, a, b, k);
    let t3 = |a, b, k| get3(&geom.t3, a, b, k);
    let tt = |a, b, k| get3(&geom.ttilde, a, b, k);
    let trace_th = |k| (0..nh).map(|j| th(j, j, k)).sum::<C64>();

    let mut s = C64::new(r_xg / (8.0 * PI) + reg / (2.0 * PI) + lap / PI, 0.0);
    let tr_d2: f64 = (0..n0).map(|k| get2(&geom.d2logh.normal, k, k)).sum();
    s -= 3.0 * tr_d2 / (8.0 * PI);
    s -= 2.0 / PI * i * (0..n0).map(|k| trace_th(k) * dl(k)).sum::<C64>();
    let dh2: f64 = geom.dlogh.horizontal.iter().map(|x| x * x).sum::<f64>() / 4.0;
    s -= 3.0 * dh2 / PI;
    let dn2: f64 = (0..n0).map(|k| dl(k) * dl(k)).sum();
    s -= 5.0 * dn2 / (4.0 * PI);

    let mut dzb2 = 0.0;
    let mut th2 = 0.0;
    for a in 0..nh {
        for j in 0..n0 {
            for k in 0..n0 {
                dzb2 += get3(&geom.tmix.dzb, a, j, k).norm_sqr();
            }
        }
        for b in 0..nh {
            for k in 0..n0 {
                th2 += th(a, b, k).norm_sqr();
            }
        }
    }
    let trth2: f64 = (0..n0).map(|k| trace_th(k).norm_sqr()).sum();
    s += (dzb2 - trth2 + th2) / (2.0 * PI);

    let mut t3sq = 0.0;
    let mut ttsq = 0.0;
    for a in 0..n0 {
        for b in 0..n0 {
            for k in 0..n0 {
                t3sq += t3(a, b, k).powi(2);
                ttsq += tt(a, b, k) * (3.0 * tt(k, b, a) - tt(a, b, k));
            }
        }
    }
    s += t3sq / (24.0 * PI) + ttsq / (64.0 * PI);

    let mu2: C64 = (0..n0).map(|k| mu(k) * mu(k)).sum();
    s += mu2 / (2.0 * PI);
    s -= (0..n0).map(|k| mu(k) * trace_th(k)).sum::<C64>() / PI;
    // sign fixed by <T(e_l, J e_l), J e_k> = -T3_llk = -2 dlogh_k
    s -= 3.0 * i / (2.0 * PI) * (0..n0).map(|k| mu(k) * dl(k)).sum::<C64>();
    let tr_dmu: C64 = (0..n0).map(|k| get2(&geom.mu_e.grad, k, k)).sum();
    s += i / (4.0 * PI) * tr_dmu;

    let p2_zero = s * 2f64.powf(n0 as f64 / 2.0);
    Ok((C64::new(phi1, 0.0), p2_zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    #[test]
    fn zero_geometry() {
        for (n, n0) in [(1, 1), (3, 1), (2, 0)] {
            let g = PointGeometry::zeros(&ModelParams::kahler_standard(n, n0).unwrap());
            let (a, b) = phi_coefficients_closed(&g).unwrap();
            assert_eq!(a, C64::new(0.0, 0.0));
            assert_eq!(b, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn scalar_curvature_alone() {
        let mut g = PointGeometry::zeros(&ModelParams::kahler_standard(2, 1).unwrap());
        g.r_xg = Some(8.0 * PI);
        let (phi1, _) = phi_coefficients_closed(&g).unwrap();
        assert!((phi1.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projective_line() {
        let mut g = PointGeometry::zeros(&ModelParams::kahler_standard(1, 1).unwrap());
        g.d2logh.normal[0][0] = -PI;
        let (phi1, p2) = phi_coefficients_closed(&g).unwrap();
        assert_eq!(phi1.norm(), 0.0);
        assert!((p2.re - 3.0 * 2f64.sqrt() / 8.0).abs() < 1e-15);
        assert!((p2.re - 0.530330).abs() < 1e-6);
    }

    #[test]
    fn missing_horizontal_scalar() {
        let mut g = PointGeometry::zeros(&ModelParams::kahler_standard(2, 1).unwrap());
        g.r_xg = None;
        assert!(matches!(phi_coefficients_closed(&g), Err(Error::MissingField(_))));
        let mut g = PointGeometry::zeros(&ModelParams::kahler_standard(1, 1).unwrap());
        g.t3.clear();
        assert!(matches!(phi_coefficients_closed(&g), Err(Error::MissingField(_))));
    }
}
