//! Holomorphic sections of `O(k)` over `CP^1` and `CP^2` with the circle acting on the
//! first homogeneous coordinate.
//!
//! Points are given in the affine chart where the last homogeneous coordinate is 1, so a
//! point of `CP^n` is a slice of `n` complex numbers `u_i = z_i / z_n`. The line bundle is
//! trivialised by `z_n^k`, whose pointwise norm is `(1 + |u|^2)^{-k/2}`, and the Kahler form
//! is twice the Fubini-Study form. With these choices
//!
//! ```text
//! || z^alpha ||^2 = 2^n alpha! / (k + n)!        (|alpha| = k)
//! ```
//!
//! All kernel values are reported in a unitary frame, so diagonal values are densities
//! against the Riemannian volume.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coefficients::PointGeometry;
use crate::model::ModelParams;
use crate::numeric::{
    compensated_sum_c, gauss_legendre, ldexp_c, ln_factorial, scaled_factorials, scaled_sum, shifted_exp_sum, Scaled,
};
use crate::{Error, Result, C64};

/// The two section spaces the crate knows about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProjectiveModel {
    /// `CP^1` with `L = O(2)` and the invariant level `|z| = 1`.
    #[serde(rename = "CP1_O2")]
    Cp1O2,
    /// `CP^2` with `L = O(2)`, circle acting on `z_0`, invariant level `|z_0|^2 = |z|^2 / 2`.
    #[serde(rename = "CP2_O2_level_half")]
    Cp2O2LevelHalf,
}

impl ProjectiveModel {
    /// Complex dimension of the projective space.
    pub fn dim(self) -> usize {
        match self {
            Self::Cp1O2 => 1,
            Self::Cp2O2LevelHalf => 2,
        }
    }

    /// Dimension of the group acting.
    pub fn n0(self) -> usize {
        1
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Cp1O2 => "CP1_O2",
            Self::Cp2O2LevelHalf => "CP2_O2_level_half",
        }
    }
}

impl std::str::FromStr for ProjectiveModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CP1_O2" => Ok(Self::Cp1O2),
            "CP2_O2_level_half" => Ok(Self::Cp2O2LevelHalf),
            _ => Err(Error::InvalidArgument(format!("unknown model `{s}`"))),
        }
    }
}

/// Which part of the section space a kernel projects onto.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selector {
    Full,
    Invariant,
    /// Circle weight `nu`; the invariant space is `nu = 0`.
    Weight(i64),
}

/// Monomial basis of `H^0(CP^n, O(k))` with closed-form norms and circle weights.
#[derive(Clone, Debug)]
pub struct SectionSpace {
    pub model: ProjectiveModel,
    pub p: u32,
    pub n: usize,
    pub k: u32,
    /// Circle weight of each homogeneous coordinate.
    pub coord_weights: Vec<i64>,
    /// Shift coming from the lift of the action to the line bundle.
    pub lift_shift: i64,
    /// Exponents `alpha` of `z_0 .. z_n`, `|alpha| = k`.
    pub basis: Vec<Vec<u32>>,
    /// `ln ||z^alpha||^2`.
    pub ln_norms: Vec<f64>,
    /// The same norms with a separate binary exponent.
    pub norms: Vec<Scaled>,
    pub weights: Vec<i64>,
}

/// JSON summary of a section space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceMetadata {
    pub model: ProjectiveModel,
    pub p: u32,
    pub dimension: usize,
    pub invariant_dimension: usize,
    pub weight_histogram: BTreeMap<i64, usize>,
}

fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = vec![];
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Builds the section space of `L^p` for one of the models.
pub fn make_section_space(model: ProjectiveModel, p: u32) -> SectionSpace {
    let n = model.dim();
    let k = 2 * p;
    let mut coord_weights = vec![0; n + 1];
    coord_weights[0] = 1;
    let lift_shift = -(p as i64);
    let basis = compositions(k, n + 1);
    let ln_norms = basis
        .iter()
        .map(|a| {
            n as f64 * 2f64.ln() + a.iter().map(|&e| ln_factorial(e as u64)).sum::<f64>()
                - ln_factorial((k as usize + n) as u64)
        })
        .collect();
    let fact = scaled_factorials(k as u64 + n as u64);
    let norms = basis
        .iter()
        .map(|a| {
            a.iter()
                .fold(Scaled::new(2f64.powi(n as i32)), |acc, &e| acc.mul(fact[e as usize]))
                .div(fact[k as usize + n])
        })
        .collect();
    let weights = basis
        .iter()
        .map(|a| a.iter().zip(&coord_weights).map(|(&e, &w)| e as i64 * w).sum::<i64>() + lift_shift)
        .collect();
    SectionSpace { model, p, n, k, coord_weights, lift_shift, basis, ln_norms, norms, weights }
}

fn check_point(n: usize, u: &[C64]) -> Result<()> {
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.len() });
    }
    Ok(())
}

fn ln_one_plus_norm2(u: &[C64]) -> f64 {
    u.iter().map(|x| x.norm_sqr()).sum::<f64>().ln_1p()
}

impl SectionSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn invariant_dimension(&self) -> usize {
        self.weights.iter().filter(|&&w| w == 0).count()
    }

    pub fn weight_histogram(&self) -> BTreeMap<i64, usize> {
        let mut h = BTreeMap::new();
        for &w in &self.weights {
            *h.entry(w).or_insert(0) += 1;
        }
        h
    }

    pub fn metadata(&self) -> SpaceMetadata {
        SpaceMetadata {
            model: self.model,
            p: self.p,
            dimension: self.dim(),
            invariant_dimension: self.invariant_dimension(),
            weight_histogram: self.weight_histogram(),
        }
    }

    /// Indices of the basis elements in the selected subspace.
    pub fn select(&self, sel: Selector) -> Result<Vec<usize>> {
        let idx: Vec<usize> = (0..self.dim())
            .filter(|&i| match sel {
                Selector::Full => true,
                Selector::Invariant => self.weights[i] == 0,
                Selector::Weight(nu) => self.weights[i] == nu,
            })
            .collect();
        if idx.is_empty() {
            return Err(Error::EmptySubspace);
        }
        Ok(idx)
    }

    /// `ln |u^alpha|` and `arg u^alpha` in the chart, `None` if the monomial vanishes at `u`.
    fn ln_monomial(&self, i: usize, u: &[C64]) -> Option<(f64, f64)> {
        let mut l = 0.0;
        let mut ph = 0.0;
        for (e, x) in self.basis[i][..self.n].iter().zip(u) {
            if *e == 0 {
                continue;
            }
            if x.norm() == 0.0 {
                return None;
            }
            l += *e as f64 * x.norm().ln();
            ph += *e as f64 * x.arg();
        }
        Some((l, ph))
    }

    /// `|u^alpha|` and `arg u^alpha` with a scaled magnitude.
    fn monomial(&self, i: usize, u: &[C64]) -> (Scaled, f64) {
        let mut m = Scaled::ONE;
        let mut ph = 0.0;
        for (e, x) in self.basis[i][..self.n].iter().zip(u) {
            if *e == 0 {
                continue;
            }
            m = m.mul(Scaled::new(x.norm()).powi(*e as u64));
            ph += *e as f64 * x.arg();
        }
        (m, ph)
    }

    /// Pointwise norm of the trivialising frame, `(1 + |u|^2)^{-p}`.
    fn frame(&self, u: &[C64]) -> Scaled {
        let q = 1.0 + u.iter().map(|x| x.norm_sqr()).sum::<f64>();
        Scaled::ONE.div(Scaled::new(q).powi(self.p as u64))
    }

    /// `ln` of the pointwise norm of the trivialising frame.
    pub fn ln_frame(&self, u: &[C64]) -> f64 {
        -0.5 * self.k as f64 * ln_one_plus_norm2(u)
    }

    /// Value of the basis section `i` at `u` in a unitary frame.
    pub fn section_value(&self, i: usize, u: &[C64]) -> Result<C64> {
        check_point(self.n, u)?;
        let (m, ph) = self.monomial(i, u);
        Ok(C64::from_polar(m.mul(self.frame(u)).to_f64(), ph))
    }

    /// Kernel of the orthogonal projection onto the selected subspace.
    pub fn bergman_kernel(&self, sel: Selector, u: &[C64], v: &[C64]) -> Result<C64> {
        check_point(self.n, u)?;
        check_point(self.n, v)?;
        let idx = self.select(sel)?;
        let frames = self.frame(u).mul(self.frame(v));
        let terms: Vec<(Scaled, C64)> = idx
            .into_iter()
            .map(|i| {
                let (a, pa) = self.monomial(i, u);
                let (b, pb) = self.monomial(i, v);
                (a.mul(b).mul(frames).div(self.norms[i]), C64::from_polar(1.0, pa - pb))
            })
            .collect();
        let (e, m) = scaled_sum(&terms);
        Ok(ldexp_c(m, e))
    }

    /// Full kernel from the closed form `(k+n)!/(2^n k!) (1 + <u, v>)^k`.
    pub fn full_kernel_closed(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        check_point(self.n, u)?;
        check_point(self.n, v)?;
        Ok(self.full_closed_log(u, v).map_or(C64::new(0.0, 0.0), |l| l.exp()))
    }

    fn full_closed_log(&self, u: &[C64], v: &[C64]) -> Option<C64> {
        let (k, n) = (self.k as u64, self.n as u64);
        let w = C64::new(1.0, 0.0) + u.iter().zip(v).map(|(a, b)| a * b.conj()).sum::<C64>();
        if w.norm() == 0.0 && k > 0 {
            return None;
        }
        let c = ln_factorial(k + n) - ln_factorial(k) - n as f64 * 2f64.ln();
        let lw = if k == 0 { C64::new(0.0, 0.0) } else { k as f64 * w.ln() };
        Some(lw + c + self.ln_frame(u) + self.ln_frame(v))
    }

    /// Average over the circle of the full kernel acted on in the first slot, by the
    /// trapezoid rule with `order` nodes. Exact once `order > 2p`.
    pub fn group_average_kernel(&self, u: &[C64], v: &[C64], order: usize) -> Result<C64> {
        check_point(self.n, u)?;
        check_point(self.n, v)?;
        if order == 0 {
            return Err(Error::InvalidArgument("quadrature order must be positive".into()));
        }
        if order < 4 * self.p as usize + 8 {
            log::warn!("group average with {order} nodes for p = {}; recommended at least {}", self.p, 4 * self.p + 8);
        }
        let mut terms = Vec::with_capacity(order);
        let mut rot = u.to_vec();
        for m in 0..order {
            let phi = 2.0 * PI * m as f64 / order as f64;
            rot[0] = u[0] * C64::from_polar(1.0, -phi);
            if let Some(l) = self.full_closed_log(&rot, v) {
                // lift of the action to the line bundle
                terms.push((l.re, C64::from_polar(1.0, l.im - self.lift_shift as f64 * phi)));
            }
        }
        let (shift, m) = shifted_exp_sum(&terms);
        Ok(m * shift.exp() / order as f64)
    }

    /// Quadrature of `f` over the chart against the Riemannian volume.
    pub fn integrate<F: Fn(&[C64]) -> C64>(&self, f: F, radial_order: usize, angular_order: usize) -> C64 {
        let rule = ChartRule::new(self.n, radial_order, angular_order);
        compensated_sum_c(rule.nodes.iter().map(|nd| f(&nd.u) * nd.w))
    }

    /// Gram matrix of the monomials in `idx` by quadrature.
    pub fn gram_quadrature(&self, idx: &[usize], radial_order: usize, angular_order: usize) -> DMatrix<C64> {
        let rule = ChartRule::new(self.n, radial_order, angular_order);
        let mut s = DMatrix::<C64>::zeros(rule.nodes.len(), idx.len());
        for (r, nd) in rule.nodes.iter().enumerate() {
            let base = 0.5 * (nd.w.ln() + self.k as f64 * nd.x_last.ln());
            for (c, &i) in idx.iter().enumerate() {
                if let Some((l, ph)) = self.ln_monomial(i, &nd.u) {
                    s[(r, c)] = C64::from_polar((l + base).exp(), ph);
                }
            }
        }
        s.adjoint() * s
    }

    /// Diagonal Gram entries by quadrature; angles are trivial for `|z^alpha|^2`.
    pub fn norms_quadrature(&self, radial_order: usize) -> Vec<f64> {
        let rule = ChartRule::new(self.n, radial_order, 1);
        (0..self.dim())
            .map(|i| {
                let terms: Vec<(f64, C64)> = rule
                    .nodes
                    .iter()
                    .filter_map(|nd| {
                        self.ln_monomial(i, &nd.u)
                            .map(|(l, _)| (2.0 * l + self.k as f64 * nd.x_last.ln() + nd.w.ln(), C64::new(1.0, 0.0)))
                    })
                    .collect();
                let (shift, m) = shifted_exp_sum(&terms);
                m.re * shift.exp()
            })
            .collect()
    }
}

/// One quadrature node in the chart.
#[derive(Clone, Debug)]
pub struct ChartNode {
    pub u: Vec<C64>,
    /// `1 / (1 + |u|^2)`.
    pub x_last: f64,
    pub w: f64,
}

/// Product rule over the chart: the moduli `|u_i|^2 = x_i / x_n` come from a collapsed
/// Gauss-Legendre rule on the simplex `x_0 + .. + x_n = 1`, the angles from the trapezoid
/// rule. In these coordinates the volume form is `2^n dx dtheta / (2 pi)^n`.
#[derive(Clone, Debug)]
pub struct ChartRule {
    pub nodes: Vec<ChartNode>,
}

impl ChartRule {
    pub fn new(n: usize, radial_order: usize, angular_order: usize) -> Self {
        let gl = gauss_legendre(radial_order, 0.0, 1.0);
        let m = angular_order.max(1);
        let mut nodes = vec![];
        let mut ri = vec![0usize; n];
        loop {
            let mut x = vec![0.0; n + 1];
            let mut rest = 1.0;
            let mut w = 2f64.powi(n as i32);
            for i in 0..n {
                let (v, wv) = gl[ri[i]];
                x[i] = rest * v;
                // triangular Jacobian: d x_i / d v_i is the mass left before step i
                w *= wv * rest;
                rest *= 1.0 - v;
            }
            x[n] = rest;
            let mut ai = vec![0usize; n];
            loop {
                let u: Vec<C64> = (0..n)
                    .map(|i| C64::from_polar((x[i] / x[n]).sqrt(), 2.0 * PI * ai[i] as f64 / m as f64))
                    .collect();
                nodes.push(ChartNode { u, x_last: x[n], w: w / (m as f64).powi(n as i32) });
                if !odometer(&mut ai, m) {
                    break;
                }
            }
            if !odometer(&mut ri, gl.len()) {
                break;
            }
        }
        Self { nodes }
    }
}

fn odometer(idx: &mut [usize], base: usize) -> bool {
    for d in idx.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Moment map, orbit volume and normal coordinate at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitGeometry {
    pub mu: f64,
    /// Orbit volume `h^2`.
    pub h2: f64,
    /// Signed arclength from the zero level along the gradient curve of `mu`.
    pub s_normal: f64,
    /// Volume density of the quotient against the normal coordinate.
    pub kappa: f64,
    /// First and second arclength derivatives of `log h`.
    pub dlogh: f64,
    pub d2logh: f64,
}

/// `tau = |u_0| / sqrt(1 + |u'|^2)`: in this variable both models look like `CP^1` near
/// the level set.
fn tau(u: &[C64]) -> f64 {
    let rest: f64 = u[1..].iter().map(|x| x.norm_sqr()).sum();
    u[0].norm() / (1.0 + rest).sqrt()
}

/// Largest arclength distance from the zero level inside the chart.
pub fn normal_range() -> f64 {
    (2.0 / PI).sqrt() * FRAC_PI_4
}

/// Orbit data at `u`.
pub fn orbit_geometry(model: ProjectiveModel, u: &[C64]) -> Result<OrbitGeometry> {
    check_point(model.dim(), u)?;
    let t = tau(u);
    if t == 0.0 {
        return Err(Error::FixedPoint);
    }
    let t2 = t * t;
    Ok(OrbitGeometry {
        mu: 2.0 * t2 / (1.0 + t2) - 1.0,
        h2: (8.0 * PI).sqrt() * t / (1.0 + t2),
        s_normal: (2.0 / PI).sqrt() * (t.atan() - FRAC_PI_4),
        kappa: 1.0,
        dlogh: (PI / 2.0).sqrt() * (1.0 - t2) / (2.0 * t),
        d2logh: -FRAC_PI_4 * (1.0 + t2).powi(2) / t2,
    })
}

/// Point at arclength `s` from the zero level on the normal curve through
/// `(e^{i angle}, rest)`.
pub fn normal_point(model: ProjectiveModel, angle: f64, rest: &[C64], s: f64) -> Result<Vec<C64>> {
    check_point(model.dim() - 1, rest)?;
    if s.abs() >= normal_range() {
        return Err(Error::InvalidArgument(format!("|s| = {} leaves the chart", s.abs())));
    }
    let t = (FRAC_PI_4 + s * (PI / 2.0).sqrt()).tan();
    let scale = (1.0 + rest.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt();
    let mut u = vec![C64::from_polar(t * scale, angle)];
    u.extend_from_slice(rest);
    Ok(u)
}

/// Point geometry of the `CP^1` model at a point of the zero level.
pub fn cp1_point_geometry() -> Result<PointGeometry> {
    let params = ModelParams::kahler_standard(1, 1)?;
    let orbit = orbit_geometry(ProjectiveModel::Cp1O2, &[C64::new(1.0, 0.0)])?;
    let mut g = PointGeometry::zeros(&params);
    g.dlogh.normal[0] = orbit.dlogh;
    g.d2logh.normal[0][0] = orbit.d2logh;
    g.enforce_normal_relations();
    Ok(g)
}
