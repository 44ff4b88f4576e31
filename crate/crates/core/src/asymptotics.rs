//! Fits and integrals over exact kernel values: extrapolated expansion coefficients,
//! Gaussian decay rates, localization ratios, dimension counts and normal-slice integrals.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::numeric::{compensated_sum, gauss_legendre};
use crate::projective::{make_section_space, normal_point, normal_range, orbit_geometry, ProjectiveModel, Selector};
use crate::{Error, Result, C64};

/// The half-integer exponent grid used for diagonal expansions.
pub const HALF_INTEGER_GRID: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

/// Least-squares fit of `v(p) = sum_e c_e p^{-e}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// Largest relative residual over the samples.
    pub residual: f64,
    pub p_grid: Vec<f64>,
    /// Ratio of extreme singular values of the column-scaled design matrix.
    pub condition: f64,
}

impl ExpansionFit {
    /// Coefficient of `p^{-e}`.
    pub fn coefficient(&self, e: f64) -> Option<f64> {
        self.exponents.iter().position(|x| (x - e).abs() < 1e-12).map(|i| self.coefficients[i])
    }
}

/// Fits `value(p) = sum_e c_e p^{-e}` by QR. At least as many samples as exponents are
/// needed; with exactly as many the fit interpolates and the residual is rounding.
pub fn richardson_extrapolate(samples: &[(f64, f64)], exponents: &[f64]) -> Result<ExpansionFit> {
    let (m, k) = (samples.len(), exponents.len());
    if k == 0 || m < k {
        return Err(Error::InvalidArgument(format!("{m} samples for {k} exponents")));
    }
    for (i, a) in samples.iter().enumerate() {
        if a.0 <= 0.0 || samples[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::InvalidArgument("p values must be positive and distinct".into()));
        }
    }
    let mut a = DMatrix::from_fn(m, k, |i, j| samples[i].0.powf(-exponents[j]));
    // column scaling keeps the conditioning diagnostic meaningful
    let scales: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let sv = a.clone().singular_values();
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::IllConditioned(format!("design condition number {condition:e}")));
    }
    let b = DVector::from_iterator(m, samples.iter().map(|s| s.1));
    let qr = a.clone().qr();
    let qtb = qr.q().transpose() * &b;
    let y = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::IllConditioned("singular triangular factor".into()))?;
    let coefficients: Vec<f64> = y.iter().zip(&scales).map(|(c, s)| c / s).collect();
    let fitted = &a * &y;
    let residual = (0..m)
        .map(|i| (fitted[i] - b[i]).abs() / b[i].abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(ExpansionFit {
        exponents: exponents.to_vec(),
        coefficients,
        residual,
        p_grid: samples.iter().map(|s| s.0).collect(),
        condition,
    })
}

/// Doubling grid `start, 2 start, ..` up to `end`.
pub fn doubling_grid(start: u32, end: u32) -> Vec<u32> {
    let mut g = vec![];
    let mut p = start.max(1);
    while p <= end {
        g.push(p);
        p *= 2;
    }
    g
}

/// A point of the zero level: `u_0 = sqrt(1 + |rest|^2)`.
pub fn level_point(model: ProjectiveModel, rest: &[C64]) -> Result<Vec<C64>> {
    normal_point(model, 0.0, rest, 0.0)
}

/// `p^{-(n - n0/2)} h^2 P^G_p(x, x)` at a point of the zero level; tends to `2^{n0/2}`.
pub fn rescaled_diagonal(model: ProjectiveModel, p: u32, rest: &[C64]) -> Result<f64> {
    let x = level_point(model, rest)?;
    let s = make_section_space(model, p);
    let k = s.bergman_kernel(Selector::Invariant, &x, &x)?;
    let h2 = orbit_geometry(model, &x)?.h2;
    let e = model.dim() as f64 - 0.5 * model.n0() as f64;
    Ok((p as f64).powf(-e) * h2 * k.re)
}

/// `p^{-1} P^{-p}_p(0, 0)` on `CP^1`: the kernel at the singular value of the moment map.
pub fn singular_weight_scaling(p: u32) -> Result<f64> {
    let s = make_section_space(ProjectiveModel::Cp1O2, p);
    let zero = [C64::new(0.0, 0.0)];
    Ok(s.bergman_kernel(Selector::Weight(-(p as i64)), &zero, &zero)?.re / p as f64)
}

/// Fits `-ln ratio = rate p s^2` through the origin.
pub fn decay_fit(samples: &[(f64, f64)], p: u32) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut num = vec![];
    let mut den = vec![];
    for &(s, r) in samples {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("non-positive kernel ratio {r} at s = {s}")));
        }
        let x = p as f64 * s * s;
        num.push(-r.ln() * x);
        den.push(x * x);
    }
    let d = compensated_sum(den);
    if d == 0.0 {
        return Err(Error::InvalidArgument("all samples on the zero level".into()));
    }
    Ok(compensated_sum(num) / d)
}

/// Ratios `P^G(x(s), x(s)) / P^G(x(0), x(0))` on a grid `|s| <= s_max`, over `angles`
/// orbit angles (a two-dimensional slice for the plane model).
pub fn decay_samples(model: ProjectiveModel, p: u32, s_max: f64, count: usize, angles: usize) -> Result<Vec<(f64, f64)>> {
    let space = make_section_space(model, p);
    let rest = vec![C64::new(0.35, -0.2); model.dim() - 1];
    let mut out = vec![];
    for a in 0..angles.max(1) {
        let angle = 2.0 * PI * a as f64 / angles.max(1) as f64;
        let x0 = normal_point(model, angle, &rest, 0.0)?;
        let k0 = space.bergman_kernel(Selector::Invariant, &x0, &x0)?.re;
        for i in 0..count {
            let s = -s_max + 2.0 * s_max * i as f64 / (count - 1).max(1) as f64;
            if s == 0.0 {
                continue;
            }
            let x = normal_point(model, angle, &rest, s)?;
            out.push((s, space.bergman_kernel(Selector::Invariant, &x, &x)?.re / k0));
        }
    }
    Ok(out)
}

/// Largest diagonal invariant kernel at a given distance from the level set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub radius: f64,
    pub value: f64,
    /// `value` over the on-level value.
    pub ratio: f64,
}

/// For `CP^1` the radius is `|z|`; for `CP^2` it is `|u_0| / sqrt(1 + |u_1|^2)`, sampled over
/// a few values of `u_1`. The level set is radius 1.
pub fn localization_scan(model: ProjectiveModel, p: u32, radii: &[f64]) -> Result<Vec<LocalizationRow>> {
    let space = make_section_space(model, p);
    let rests: Vec<Vec<C64>> = match model {
        ProjectiveModel::Cp1O2 => vec![vec![]],
        ProjectiveModel::Cp2O2LevelHalf => {
            [0.0, 0.5, 2.0].iter().map(|&r| vec![C64::from_polar(r, 0.3)]).collect()
        }
    };
    let sup_at = |radius: f64| -> Result<f64> {
        let mut best = 0.0f64;
        for rest in &rests {
            let scale = (1.0 + rest.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt();
            for a in 0..4 {
                let mut u = vec![C64::from_polar(radius * scale, a as f64 * PI / 2.0)];
                u.extend_from_slice(rest);
                best = best.max(space.bergman_kernel(Selector::Invariant, &u, &u)?.re);
            }
        }
        Ok(best)
    };
    let on_level = sup_at(1.0)?;
    radii
        .iter()
        .map(|&r| {
            let value = sup_at(r)?;
            Ok(LocalizationRow { radius: r, value, ratio: value / on_level })
        })
        .collect()
}

/// Exact invariant dimensions against the leading term of the volume formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub model: ProjectiveModel,
    /// `(p, exact dimension, predicted leading term)`.
    pub rows: Vec<(u32, usize, f64)>,
    /// Least-squares slope of dimension against `p`.
    pub slope: f64,
}

pub fn invariant_dimension_report(model: ProjectiveModel, p_grid: &[u32]) -> DimensionReport {
    let rows: Vec<(u32, usize, f64)> = p_grid
        .iter()
        .map(|&p| {
            let d = make_section_space(model, p).invariant_dimension();
            // the reduction is a point, resp. CP^1 with a degree-one bundle
            let lead = match model {
                ProjectiveModel::Cp1O2 => 1.0,
                ProjectiveModel::Cp2O2LevelHalf => p as f64,
            };
            (p, d, lead)
        })
        .collect();
    let m = rows.len() as f64;
    let slope = if rows.len() < 2 {
        0.0
    } else {
        let mp = rows.iter().map(|r| r.0 as f64).sum::<f64>() / m;
        let md = rows.iter().map(|r| r.1 as f64).sum::<f64>() / m;
        let num: f64 = rows.iter().map(|r| (r.0 as f64 - mp) * (r.1 as f64 - md)).sum();
        let den: f64 = rows.iter().map(|r| (r.0 as f64 - mp).powi(2)).sum();
        num / den
    };
    DimensionReport { model, rows, slope }
}

/// Result of a normal-slice integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceIntegral {
    pub value: C64,
    /// Cutoff actually used, after clamping to the chart.
    pub eps: f64,
    /// Gaussian estimate of the mass beyond the cutoff.
    pub tail: f64,
}

/// Number of Gauss-Legendre nodes on `[-eps, eps]`.
pub const SLICE_NODES: usize = 200;

/// `int_{|s| <= eps} f(s) ds` with a Gaussian tail estimate at decay rate `rate p`.
pub fn slice_integral<F: Fn(f64) -> Result<C64>>(f: F, eps: f64, rate_p: f64) -> Result<SliceIntegral> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("cutoff must be positive".into()));
    }
    let mut re = vec![];
    let mut im = vec![];
    for (s, w) in gauss_legendre(SLICE_NODES, -eps, eps) {
        let v = f(s)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand at s = {s}")));
        }
        re.push(w * v.re);
        im.push(w * v.im);
    }
    let edge = f(eps)?.norm() + f(-eps)?.norm();
    let tail = if rate_p > 0.0 { edge / (2.0 * rate_p * eps) } else { f64::INFINITY };
    Ok(SliceIntegral { value: C64::new(compensated_sum(re), compensated_sum(im)), eps, tail })
}

/// `p^{-(n - n0)} int h^2 P^G_p kappa ds` across the zero level.
///
/// The cutoff is clamped to the chart, where the normal curve reaches the fixed points.
pub fn normal_slice_integral(model: ProjectiveModel, p: u32, eps: f64) -> Result<SliceIntegral> {
    let eps = eps.min(normal_range() * (1.0 - 1e-9));
    let space = make_section_space(model, p);
    let rest = vec![C64::new(0.0, 0.0); model.dim() - 1];
    let norm = (p as f64).powi((model.dim() - model.n0()) as i32);
    slice_integral(
        |s| {
            let x = normal_point(model, 0.0, &rest, s)?;
            let g = orbit_geometry(model, &x)?;
            Ok(space.bergman_kernel(Selector::Invariant, &x, &x)? * (g.h2 * g.kappa / norm))
        },
        eps,
        2.0 * PI * p as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let samples: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0].iter().map(|&p| (p, 7.0)).collect();
        let fit = richardson_extrapolate(&samples, &HALF_INTEGER_GRID).unwrap();
        assert!((fit.coefficients[0] - 7.0).abs() < 1e-10);
        for c in &fit.coefficients[1..] {
            assert!(c.abs() < 1e-8);
        }
    }

    #[test]
    fn singular_scaling_series() {
        let samples: Vec<(f64, f64)> =
            doubling_grid(100, 1600).iter().map(|&p| (p as f64, singular_weight_scaling(p).unwrap())).collect();
        for &(p, v) in &samples {
            assert!((v - (1.0 + 0.5 / p)).abs() < 1e-13, "{p}: {:e}", v - (1.0 + 0.5 / p));
        }
        let fit = richardson_extrapolate(&samples, &[0.0, 1.0]).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_designs() {
        assert!(richardson_extrapolate(&[(1.0, 1.0)], &[0.0, 1.0]).is_err());
        assert!(richardson_extrapolate(&[(2.0, 1.0), (2.0, 1.0)], &[0.0]).is_err());
        assert!(matches!(
            richardson_extrapolate(&[(2.0, 1.0), (3.0, 1.0)], &[0.5, 0.5]),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn synthetic_gaussian_rate() {
        let samples: Vec<(f64, f64)> = (1..20).map(|i| {
            let s = 0.01 * i as f64;
            (s, (-5.0 * 30.0 * s * s).exp())
        }).collect();
        assert!((decay_fit(&samples, 30).unwrap() - 5.0).abs() < 1e-13);
        assert!(decay_fit(&[(0.1, 0.0)], 3).is_err());
    }

    #[test]
    fn localization_trivial_ratio() {
        let rows = localization_scan(ProjectiveModel::Cp1O2, 1, &[1.0]).unwrap();
        assert!((rows[0].ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_integrand() {
        let r = slice_integral(|_| Ok(C64::new(0.0, 0.0)), 0.5, 1.0).unwrap();
        assert_eq!(r.value, C64::new(0.0, 0.0));
        assert_eq!(r.tail, 0.0);
    }

    #[test]
    fn dimension_counts() {
        let r = invariant_dimension_report(ProjectiveModel::Cp2O2LevelHalf, &[1, 2, 3]);
        assert_eq!(r.rows.iter().map(|r| r.1).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert!((r.slope - 1.0).abs() < 1e-14);
    }
}
