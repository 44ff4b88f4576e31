//! Toeplitz operators on the projective section spaces.
//!
//! Matrix entries are computed in the orthonormalised monomial basis. The angular part of
//! each integral is done by FFT at every radial node, so a symbol with few Fourier modes
//! only touches the matching diagonals of the matrix.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::asymptotics::level_point;
use crate::numeric::gauss_legendre;
use crate::projective::{orbit_geometry, ProjectiveModel, SectionSpace, Selector};
use crate::{Error, Result, C64};

type Func = Arc<dyn Fn(&[C64]) -> C64 + Send + Sync>;
type Grad = Arc<dyn Fn(&[C64]) -> C64 + Send + Sync>;

/// A function on the chart, optionally with its holomorphic derivative `df/du_0`.
#[derive(Clone)]
pub struct Symbol {
    pub id: String,
    f: Func,
    dz: Option<Grad>,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol").field("id", &self.id).finish()
    }
}

fn q(u: &[C64]) -> f64 {
    1.0 + u.iter().map(|x| x.norm_sqr()).sum::<f64>()
}

impl Symbol {
    pub fn new<F: Fn(&[C64]) -> C64 + Send + Sync + 'static>(id: &str, f: F) -> Self {
        Self { id: id.into(), f: Arc::new(f), dz: None }
    }

    pub fn with_derivative<G: Fn(&[C64]) -> C64 + Send + Sync + 'static>(mut self, dz: G) -> Self {
        self.dz = Some(Arc::new(dz));
        self
    }

    pub fn eval(&self, u: &[C64]) -> C64 {
        (self.f)(u)
    }

    pub fn constant(c: C64) -> Self {
        Self::new(&format!("const({c})"), move |_| c).with_derivative(|_| C64::new(0.0, 0.0))
    }

    /// `|z_0|^2 / |z|^2`, which is `t / (1 + t)` with `t = |z|^2` on `CP^1`.
    pub fn level_fraction() -> Self {
        Self::new("t/(1+t)", |u| C64::new(u[0].norm_sqr() / q(u), 0.0))
            .with_derivative(|u| u[0].conj() * (q(u) - u[0].norm_sqr()) / (q(u) * q(u)))
    }

    /// Euclidean coordinates of the round sphere `CP^1`, `x_1 + i x_2 = 2z / (1 + |z|^2)`.
    pub fn sphere(axis: usize) -> Self {
        match axis {
            1 => Self::new("x1", |u| C64::new(2.0 * u[0].re / q(u), 0.0))
                .with_derivative(|u| (C64::new(1.0, 0.0) - u[0].conj().powi(2)) / (q(u) * q(u))),
            2 => Self::new("x2", |u| C64::new(2.0 * u[0].im / q(u), 0.0))
                .with_derivative(|u| -C64::i() * (C64::new(1.0, 0.0) + u[0].conj().powi(2)) / (q(u) * q(u))),
            _ => Self::new("x3", |u| C64::new((u[0].norm_sqr() - 1.0) / q(u), 0.0))
                .with_derivative(|u| 2.0 * u[0].conj() / (q(u) * q(u))),
        }
    }

    /// `df/du_0`, by a five-point difference when no derivative was supplied.
    pub fn dz(&self, u: &[C64]) -> C64 {
        if let Some(d) = &self.dz {
            return d(u);
        }
        let h = 1e-4;
        let along = |dir: C64| {
            let at = |s: f64| {
                let mut v = u.to_vec();
                v[0] += dir * s;
                (self.f)(&v)
            };
            (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
        };
        0.5 * (along(C64::new(1.0, 0.0)) - C64::i() * along(C64::i()))
    }
}

/// Poisson bracket of real symbols on `CP^1` against `2 pi omega`, where `omega` is twice the
/// Fubini-Study form: `{f, g} = xi_g(df)` with `2 pi i_{xi_g} omega = dg`.
pub fn poisson_bracket(f1: &Symbol, f2: &Symbol) -> Symbol {
    let (a, b) = (f1.clone(), f2.clone());
    Symbol::new(&format!("{{{},{}}}", f1.id, f2.id), move |u| {
        let s = q(u);
        C64::new((a.dz(u) * b.dz(u).conj()).im * s * s, 0.0)
    })
}

/// Toeplitz matrix in the orthonormalised basis of a subspace.
#[derive(Clone, Debug)]
pub struct ToeplitzMatrix {
    pub p: u32,
    pub symbol_id: String,
    /// `entries[(i, j)] = <f s_j, s_i>`.
    pub entries: DMatrix<C64>,
    /// `(radial, angular)` orders of the accepted quadrature.
    pub quadrature_order: (usize, usize),
}

/// Default orders: `4p + 16` radial nodes, `2k + 16` angles.
pub fn default_orders(space: &SectionSpace) -> (usize, usize) {
    (4 * space.p as usize + 16, 2 * space.k as usize + 16)
}

fn assemble(space: &SectionSpace, f: &Symbol, idx: &[usize], radial: usize, angular: usize) -> DMatrix<C64> {
    let n = space.n;
    let m = angular;
    let gl = gauss_legendre(radial, 0.0, 1.0);
    // collapsed simplex nodes as in the chart rule
    let mut radial_nodes = vec![];
    let mut ri = vec![0usize; n];
    loop {
        let mut x = vec![0.0; n + 1];
        let mut rest = 1.0;
        let mut w = 2f64.powi(n as i32);
        for i in 0..n {
            let (v, wv) = gl[ri[i]];
            x[i] = rest * v;
            w *= wv * rest;
            rest *= 1.0 - v;
        }
        x[n] = rest;
        radial_nodes.push((x, w));
        if !bump(&mut ri, gl.len()) {
            break;
        }
    }
    let planner = std::sync::Mutex::new(FftPlanner::<f64>::new());
    let fft = planner.lock().unwrap().plan_fft_forward(m);
    let total = m.pow(n as u32);
    // Fourier coefficients of f on each torus, f_hat[r][flat mode]
    let spectra: Vec<Vec<C64>> = radial_nodes
        .par_iter()
        .map(|(x, _)| {
            let radii: Vec<f64> = (0..n).map(|i| (x[i] / x[n]).sqrt()).collect();
            let mut buf = vec![C64::new(0.0, 0.0); total];
            let mut ai = vec![0usize; n];
            let mut u = vec![C64::new(0.0, 0.0); n];
            for b in buf.iter_mut() {
                for i in 0..n {
                    u[i] = C64::from_polar(radii[i], 2.0 * PI * ai[i] as f64 / m as f64);
                }
                *b = f.eval(&u);
                bump(&mut ai, m);
            }
            // axis 0 varies fastest
            let mut scratch = vec![C64::new(0.0, 0.0); m];
            for axis in 0..n {
                let stride = m.pow(axis as u32);
                for start in 0..total {
                    if (start / stride) % m != 0 {
                        continue;
                    }
                    for (t, s) in scratch.iter_mut().enumerate() {
                        *s = buf[start + t * stride];
                    }
                    fft.process(&mut scratch);
                    for (t, s) in scratch.iter().enumerate() {
                        buf[start + t * stride] = *s;
                    }
                }
            }
            let scale = 1.0 / total as f64;
            buf.iter().map(|v| v * scale).collect()
        })
        .collect();
    let flat = |d: &[i64]| -> usize {
        let mut k = 0usize;
        for (axis, &v) in d.iter().enumerate() {
            k += (v.rem_euclid(m as i64) as usize) * m.pow(axis as u32);
        }
        k
    };
    let peak = spectra.iter().flat_map(|s| s.iter().map(|v| v.norm())).fold(0.0, f64::max);
    let mut live = vec![false; total];
    for s in &spectra {
        for (k, v) in s.iter().enumerate() {
            if v.norm() > 1e-15 * peak {
                live[k] = true;
            }
        }
    }
    let logs: Vec<(Vec<f64>, f64, f64)> = radial_nodes
        .iter()
        .map(|(x, w)| ((0..n).map(|i| (x[i] / x[n]).ln()).collect(), space.k as f64 * x[n].ln(), *w))
        .collect();
    let d = idx.len();
    let rows: Vec<Vec<C64>> = (0..d)
        .into_par_iter()
        .map(|a| {
            let bi = &space.basis[idx[a]];
            (0..d)
                .map(|b| {
                    let bj = &space.basis[idx[b]];
                    let diff: Vec<i64> = (0..n).map(|l| bi[l] as i64 - bj[l] as i64).collect();
                    let key = flat(&diff);
                    if !live[key] {
                        return C64::new(0.0, 0.0);
                    }
                    let half = -0.5 * (space.ln_norms[idx[a]] + space.ln_norms[idx[b]]);
                    let mut acc = C64::new(0.0, 0.0);
                    for (r, (lt, lx, w)) in logs.iter().enumerate() {
                        let mut l = lx + half;
                        for i in 0..n {
                            let e = 0.5 * (bi[i] + bj[i]) as f64;
                            if e > 0.0 {
                                l += e * lt[i];
                            }
                        }
                        acc += spectra[r][key] * (w * l.exp());
                    }
                    acc
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(d, d, |i, j| rows[i][j])
}

fn bump(idx: &mut [usize], base: usize) -> bool {
    for v in idx.iter_mut() {
        *v += 1;
        if *v < base {
            return true;
        }
        *v = 0;
    }
    false
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Toeplitz matrix of `f` on the selected subspace. The quadrature is accepted when
/// doubling both orders changes no entry by more than `1e-10`.
pub fn toeplitz_matrix(space: &SectionSpace, f: &Symbol, sel: Selector) -> Result<ToeplitzMatrix> {
    let (r, a) = default_orders(space);
    toeplitz_matrix_with_orders(space, f, sel, r, a)
}

pub fn toeplitz_matrix_with_orders(
    space: &SectionSpace,
    f: &Symbol,
    sel: Selector,
    radial: usize,
    angular: usize,
) -> Result<ToeplitzMatrix> {
    let idx = space.select(sel)?;
    let coarse = assemble(space, f, &idx, radial, angular);
    let fine = assemble(space, f, &idx, 2 * radial, 2 * angular);
    let change = max_abs(&(&fine - &coarse));
    if !(change <= 1e-10 * max_abs(&fine).max(1.0)) {
        return Err(Error::Quadrature(format!("entries moved by {change:e} under order doubling")));
    }
    Ok(ToeplitzMatrix { p: space.p, symbol_id: f.id.clone(), entries: fine, quadrature_order: (2 * radial, 2 * angular) })
}

/// Orbit average `f^G(x) = int_G f(g x) dg` by the trapezoid rule.
pub fn orbit_average(f: &Symbol, x: &[C64], order: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let mut y = x.to_vec();
    for m in 0..order {
        y[0] = x[0] * C64::from_polar(1.0, 2.0 * PI * m as f64 / order as f64);
        acc += f.eval(&y);
    }
    acc / order as f64
}

/// The reduced Toeplitz operator.
#[derive(Clone, Debug)]
pub enum InvariantToeplitz {
    /// The quotient is a point: `p^{-n0/2} sigma T sigma^*` is a number.
    Scalar(C64),
    /// Otherwise the compression of `f` to the invariant sections, in their orthonormal
    /// basis.
    Matrix(DMatrix<C64>),
}

/// `p^{-n0/2} sigma^G f sigma^{G*}`; for `f = 1` on a point quotient this is the
/// reduced Bergman density.
pub fn invariant_toeplitz(space: &SectionSpace, f: &Symbol) -> Result<InvariantToeplitz> {
    let t = toeplitz_matrix(space, f, Selector::Invariant)?;
    match space.model {
        ProjectiveModel::Cp1O2 => {
            let idx = space.select(Selector::Invariant)?;
            let x0 = level_point(space.model, &[])?;
            let vals: Vec<C64> = idx
                .iter()
                .map(|&i| space.section_value(i, &x0).map(|v| v / (0.5 * space.ln_norms[i]).exp()))
                .collect::<Result<_>>()?;
            let mut acc = C64::new(0.0, 0.0);
            for (a, va) in vals.iter().enumerate() {
                for (b, vb) in vals.iter().enumerate() {
                    acc += va * t.entries[(a, b)] * vb.conj();
                }
            }
            let n0 = space.model.n0() as f64;
            Ok(InvariantToeplitz::Scalar(acc * (space.p as f64).powf(-0.5 * n0)))
        }
        ProjectiveModel::Cp2O2LevelHalf => Ok(InvariantToeplitz::Matrix(t.entries)),
    }
}

/// `max_ij |(2p)^{-n0/2} <sigma s_i, sigma s_j>_h - delta_ij|` over an orthonormal invariant
/// basis, with the orbit-volume weighted product on the quotient. Point quotients only.
pub fn isometry_defect(space: &SectionSpace) -> Result<f64> {
    if space.model != ProjectiveModel::Cp1O2 {
        return Err(Error::Unsupported("isometry defect needs the quotient metric; only point quotients".into()));
    }
    let idx = space.select(Selector::Invariant)?;
    let x0 = level_point(space.model, &[])?;
    let h2 = orbit_geometry(space.model, &x0)?.h2;
    let vals: Vec<C64> = idx
        .iter()
        .map(|&i| space.section_value(i, &x0).map(|v| v / (0.5 * space.ln_norms[i]).exp()))
        .collect::<Result<_>>()?;
    let n0 = space.model.n0() as f64;
    let scale = (2.0 * space.p as f64).powf(-0.5 * n0) * h2;
    let mut worst = 0.0f64;
    for (a, va) in vals.iter().enumerate() {
        for (b, vb) in vals.iter().enumerate() {
            let delta = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((va * vb.conj() * scale - delta).norm());
        }
    }
    Ok(worst)
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<C64>) -> f64 {
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// `|| p [T_f1, T_f2] - (1/i) T_{f1, f2} ||` on the full section space of `CP^1`.
pub fn commutator_residual(space: &SectionSpace, f1: &Symbol, f2: &Symbol) -> Result<f64> {
    if space.model != ProjectiveModel::Cp1O2 {
        return Err(Error::Unsupported("commutator law is checked with the trivial group on CP^1".into()));
    }
    let t1 = toeplitz_matrix(space, f1, Selector::Full)?.entries;
    let t2 = toeplitz_matrix(space, f2, Selector::Full)?.entries;
    let tb = toeplitz_matrix(space, &poisson_bracket(f1, f2), Selector::Full)?.entries;
    let p = space.p as f64;
    let r = (&t1 * &t2 - &t2 * &t1) * C64::new(p, 0.0) + tb * C64::i();
    Ok(operator_norm(&r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::make_section_space;

    #[test]
    fn identity_symbol() {
        let s = make_section_space(ProjectiveModel::Cp1O2, 6);
        let t = toeplitz_matrix(&s, &Symbol::constant(C64::new(1.0, 0.0)), Selector::Full).unwrap();
        let id = DMatrix::<C64>::identity(s.dim(), s.dim());
        assert!(max_abs(&(t.entries - id)) < 1e-12);
    }

    #[test]
    fn level_fraction_diagonal() {
        let s = make_section_space(ProjectiveModel::Cp1O2, 9);
        let t = toeplitz_matrix(&s, &Symbol::level_fraction(), Selector::Full).unwrap();
        for j in 0..s.dim() {
            let target = (j as f64 + 1.0) / (2.0 * 9.0 + 2.0);
            assert!((t.entries[(j, j)].re - target).abs() < 1e-12);
        }
    }

    #[test]
    fn bracket_of_sphere_coordinates() {
        let b = poisson_bracket(&Symbol::sphere(1), &Symbol::sphere(2));
        let x3 = Symbol::sphere(3);
        for z in [C64::new(0.3, 0.2), C64::new(-1.5, 0.7), C64::new(0.0, 0.0)] {
            assert!((b.eval(&[z]) + x3.eval(&[z])).norm() < 1e-14);
        }
        // finite differences agree with the supplied derivative
        let plain = Symbol::new("x1", |u| C64::new(2.0 * u[0].re / q(u), 0.0));
        let z = [C64::new(0.4, -0.9)];
        assert!((plain.dz(&z) - Symbol::sphere(1).dz(&z)).norm() < 1e-10);
    }

    #[test]
    fn zero_and_equal_symbols() {
        let s = make_section_space(ProjectiveModel::Cp1O2, 4);
        let zero = Symbol::constant(C64::new(0.0, 0.0));
        match invariant_toeplitz(&s, &zero).unwrap() {
            InvariantToeplitz::Scalar(v) => assert_eq!(v, C64::new(0.0, 0.0)),
            _ => panic!(),
        }
        let x1 = Symbol::sphere(1);
        assert!(commutator_residual(&s, &x1, &x1).unwrap() < 1e-12);
        assert!(commutator_residual(&s, &x1, &Symbol::constant(C64::new(2.0, 0.0))).unwrap() < 1e-10);
    }

    #[test]
    fn aliasing_is_reported() {
        let s = make_section_space(ProjectiveModel::Cp1O2, 3);
        let wild = Symbol::new("wild", |u| C64::new((40.0 * u[0].arg()).cos(), 0.0));
        assert!(matches!(toeplitz_matrix_with_orders(&s, &wild, Selector::Full, 8, 8), Err(Error::Quadrature(_))));
    }
}
