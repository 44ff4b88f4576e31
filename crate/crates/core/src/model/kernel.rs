use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::ladder::{AlgebraSettings, LadderPolynomial, Letter, WordLayout};
use super::params::ModelParams;
use super::poly::Poly;
use crate::numeric::odd_double_factorial;
use crate::{Error, Result};

/// A point of the model space: horizontal complex coordinates and normal real ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub z: Vec<C64>,
    pub zperp: Vec<f64>,
}

impl ModelPoint {
    pub fn origin(params: &ModelParams) -> Self {
        Self { z: vec![C64::new(0.0, 0.0); params.nh()], zperp: vec![0.0; params.n0] }
    }

    /// From real split coordinates `(x_1, y_1, ..., x_m, y_m, Z_1, ..., Z_n0)`.
    pub fn from_real(params: &ModelParams, x: &[f64]) -> Result<Self> {
        if x.len() != params.point_dim() {
            return Err(Error::DimensionMismatch { expected: params.point_dim(), got: x.len() });
        }
        let nh = params.nh();
        let z = (0..nh).map(|i| C64::new(x[2 * i], x[2 * i + 1])).collect();
        Ok(Self { z, zperp: x[2 * nh..].to_vec() })
    }

    pub fn neg(&self) -> Self {
        Self { z: self.z.iter().map(|c| -c).collect(), zperp: self.zperp.iter().map(|x| -x).collect() }
    }

    fn check(&self, params: &ModelParams) -> Result<()> {
        if self.z.len() != params.nh() {
            return Err(Error::DimensionMismatch { expected: params.nh(), got: self.z.len() });
        }
        if self.zperp.len() != params.n0 {
            return Err(Error::DimensionMismatch { expected: params.n0, got: self.zperp.len() });
        }
        Ok(())
    }
}

/// Variable of a kernel polynomial. Primed variables belong to the second argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KVar {
    Z(usize),
    Zbar(usize),
    Zperp(usize),
    Zp(usize),
    Zbarp(usize),
    Zperpp(usize),
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct KernelLayout {
    pub nh: usize,
    pub n0: usize,
}

impl KernelLayout {
    pub fn new(p: &ModelParams) -> Self {
        Self { nh: p.nh(), n0: p.n0 }
    }
    pub fn len(&self) -> usize {
        4 * self.nh + 2 * self.n0
    }
    pub fn slot(&self, v: KVar) -> usize {
        let (nh, n0) = (self.nh, self.n0);
        match v {
            KVar::Z(i) => i,
            KVar::Zbar(i) => nh + i,
            KVar::Zperp(j) => 2 * nh + j,
            KVar::Zp(i) => 2 * nh + n0 + i,
            KVar::Zbarp(i) => 3 * nh + n0 + i,
            KVar::Zperpp(j) => 4 * nh + n0 + j,
        }
    }
}

/// Domain of a closed-form Gaussian integral of a kernel's diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationDomain {
    /// `Z = Z' = (0, Zperp)`, integrated over `Zperp`.
    DiagonalNormal,
    /// `Z = Z'` over the whole model space.
    FullDiagonalSlice,
}

/// The kernel `q(Z, Z') P(Z, Z')` with `P` the model Gaussian kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelPolynomial {
    params: ModelParams,
    settings: AlgebraSettings,
    q: Poly,
}

impl KernelPolynomial {
    pub fn identity(params: &ModelParams) -> Self {
        let lay = KernelLayout::new(params);
        Self { params: params.clone(), settings: AlgebraSettings::default(), q: Poly::one(lay.len()) }
    }

    pub fn zero(params: &ModelParams) -> Self {
        let lay = KernelLayout::new(params);
        Self { params: params.clone(), settings: AlgebraSettings::default(), q: Poly::zero(lay.len()) }
    }

    pub fn from_poly(params: &ModelParams, q: Poly) -> Result<Self> {
        let lay = KernelLayout::new(params);
        if q.nvars() != lay.len() {
            return Err(Error::DimensionMismatch { expected: lay.len(), got: q.nvars() });
        }
        Ok(Self { params: params.clone(), settings: AlgebraSettings::default(), q })
    }

    /// `x * P` for a single variable `x`.
    pub fn var(params: &ModelParams, v: KVar) -> Self {
        let lay = KernelLayout::new(params);
        Self { params: params.clone(), settings: AlgebraSettings::default(), q: Poly::var(lay.len(), lay.slot(v)) }
    }

    /// `c * prod x^k * P` from `(variable, power)` pairs.
    pub fn monomial(params: &ModelParams, mono: &[(KVar, u8)], c: C64) -> Self {
        let lay = KernelLayout::new(params);
        let mut e = vec![0u8; lay.len()];
        for (v, k) in mono {
            e[lay.slot(*v)] += k;
        }
        Self { params: params.clone(), settings: AlgebraSettings::default(), q: Poly::monomial(e, c) }
    }

    pub fn with_settings(mut self, settings: AlgebraSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn q(&self) -> &Poly {
        &self.q
    }

    pub fn degree(&self) -> usize {
        self.q.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_zero()
    }

    /// Coefficient of a monomial given as `(variable, power)` pairs.
    pub fn coeff(&self, mono: &[(KVar, u8)]) -> C64 {
        let lay = KernelLayout::new(&self.params);
        let mut e = vec![0u8; lay.len()];
        for (v, k) in mono {
            e[lay.slot(*v)] += k;
        }
        self.q.coeff(&e)
    }

    fn same_params(&self, other: &Self) -> Result<()> {
        if self.params != other.params {
            return Err(Error::ParamMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_params(other)?;
        let mut q = self.q.clone();
        q.add_assign(&other.q);
        q.prune(self.settings.drop_rel);
        Ok(Self { q, ..self.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { q: self.q.scale(s), ..self.clone() }
    }

    /// Multiply `q` by another polynomial in the kernel variables.
    pub fn mul_poly(&self, f: &Poly) -> Result<Self> {
        if f.nvars() != self.q.nvars() {
            return Err(Error::DimensionMismatch { expected: self.q.nvars(), got: f.nvars() });
        }
        let mut q = self.q.mul(f);
        q.prune(self.settings.drop_rel);
        self.checked(q)
    }

    fn checked(&self, q: Poly) -> Result<Self> {
        let d = q.degree();
        if d > self.settings.degree_cap {
            return Err(Error::DegreeOverflow { degree: d, cap: self.settings.degree_cap });
        }
        Ok(Self { q, ..self.clone() })
    }

    /// Kernel adjoint `K*(Z, Z') = conj K(Z', Z)`.
    pub fn adjoint(&self) -> Self {
        let lay = KernelLayout::new(&self.params);
        let (nh, n0) = (lay.nh, lay.n0);
        let q = self.q.map_monomials(lay.len(), |e, c| {
            let mut out = vec![0u8; e.len()];
            for i in 0..nh {
                out[lay.slot(KVar::Z(i))] = e[lay.slot(KVar::Zbarp(i))];
                out[lay.slot(KVar::Zbar(i))] = e[lay.slot(KVar::Zp(i))];
                out[lay.slot(KVar::Zp(i))] = e[lay.slot(KVar::Zbar(i))];
                out[lay.slot(KVar::Zbarp(i))] = e[lay.slot(KVar::Z(i))];
            }
            for j in 0..n0 {
                out[lay.slot(KVar::Zperp(j))] = e[lay.slot(KVar::Zperpp(j))];
                out[lay.slot(KVar::Zperpp(j))] = e[lay.slot(KVar::Zperp(j))];
            }
            (out, c.conj())
        });
        Self { q, ..self.clone() }
    }

    /// `q(-Z, -Z')` times `P`; `P` itself is even.
    pub fn reflect(&self) -> Self {
        let q = self.q.map_monomials(self.q.nvars(), |e, c| {
            let d: u32 = e.iter().map(|&k| k as u32).sum();
            (e.to_vec(), if d % 2 == 1 { -c } else { c })
        });
        Self { q, ..self.clone() }
    }

    /// Odd-degree and even-degree parts of `q`.
    pub fn parity_parts(&self) -> (Poly, Poly) {
        let mut even = Poly::zero(self.q.nvars());
        let mut odd = Poly::zero(self.q.nvars());
        for (e, c) in self.q.iter() {
            let d: u32 = e.iter().map(|&k| k as u32).sum();
            if d % 2 == 0 {
                even.add_term(e.clone(), *c);
            } else {
                odd.add_term(e.clone(), *c);
            }
        }
        (even, odd)
    }

    /// Value `q(Z, Z') P(Z, Z')` at real split coordinates.
    pub fn eval(&self, z: &[f64], zp: &[f64]) -> Result<C64> {
        let a = ModelPoint::from_real(&self.params, z)?;
        let b = ModelPoint::from_real(&self.params, zp)?;
        self.eval_at(&a, &b)
    }

    pub fn eval_at(&self, z: &ModelPoint, zp: &ModelPoint) -> Result<C64> {
        z.check(&self.params)?;
        zp.check(&self.params)?;
        let lay = KernelLayout::new(&self.params);
        let mut x = vec![C64::new(0.0, 0.0); lay.len()];
        for i in 0..lay.nh {
            x[lay.slot(KVar::Z(i))] = z.z[i];
            x[lay.slot(KVar::Zbar(i))] = z.z[i].conj();
            x[lay.slot(KVar::Zp(i))] = zp.z[i];
            x[lay.slot(KVar::Zbarp(i))] = zp.z[i].conj();
        }
        for j in 0..lay.n0 {
            x[lay.slot(KVar::Zperp(j))] = C64::new(z.zperp[j], 0.0);
            x[lay.slot(KVar::Zperpp(j))] = C64::new(zp.zperp[j], 0.0);
        }
        Ok(self.q.eval(&x) * model_kernel(&self.params, z, zp))
    }

    /// Largest coefficient difference of the polynomial parts.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.q.max_diff(&other.q)
    }

    pub(crate) fn apply_letter(&self, l: Letter) -> Result<Self> {
        let q = apply_letter_poly(&self.params, l, &self.q);
        self.checked(q)
    }
}

/// The model kernel `P(Z, Z')`.
pub fn model_kernel(params: &ModelParams, z: &ModelPoint, zp: &ModelPoint) -> C64 {
    let mut v = C64::new(1.0, 0.0);
    for (i, a) in params.a.iter().enumerate() {
        let (w, wp) = (z.z[i], zp.z[i]);
        let e = -(a / 4.0) * (w.norm_sqr() + wp.norm_sqr() - 2.0 * w * wp.conj());
        v *= (a / (2.0 * PI)) * e.exp();
    }
    for (j, a) in params.a_perp.iter().enumerate() {
        let (t, tp) = (z.zperp[j], zp.zperp[j]);
        v *= (a / PI).sqrt() * (-(a / 2.0) * (t * t + tp * tp)).exp();
    }
    v
}

fn apply_letter_poly(params: &ModelParams, l: Letter, q: &Poly) -> Poly {
    let lay = KernelLayout::new(params);
    let c = |x: f64| C64::new(x, 0.0);
    match l {
        Letter::Z(i) => q.mul_var(lay.slot(KVar::Z(i))),
        Letter::Zbar(i) => q.mul_var(lay.slot(KVar::Zbar(i))),
        Letter::Zperp(j) => q.mul_var(lay.slot(KVar::Zperp(j))),
        Letter::B(i) => {
            // b (q P) = (-2 dq/dz + a (zbar - zbar') q) P
            let a = params.a[i];
            let mut out = q.deriv(lay.slot(KVar::Z(i))).scale(c(-2.0));
            out.add_scaled(&q.mul_var(lay.slot(KVar::Zbar(i))), c(a));
            out.add_scaled(&q.mul_var(lay.slot(KVar::Zbarp(i))), c(-a));
            out
        }
        Letter::BPlus(i) => q.deriv(lay.slot(KVar::Zbar(i))).scale(c(2.0)),
        Letter::BPerp(j) => {
            let a = params.a_perp[j];
            let mut out = q.deriv(lay.slot(KVar::Zperp(j))).scale(c(-1.0));
            out.add_scaled(&q.mul_var(lay.slot(KVar::Zperp(j))), c(2.0 * a));
            out
        }
        Letter::BPerpPlus(j) => q.deriv(lay.slot(KVar::Zperp(j))),
    }
}

/// `op K`, with the operator acting on the first argument.
pub fn apply_to_kernel(op: &LadderPolynomial, k: &KernelPolynomial) -> Result<KernelPolynomial> {
    if op.params() != k.params() {
        return Err(Error::ParamMismatch);
    }
    let lay = WordLayout::new(op.params());
    let mut acc = Poly::zero(k.q.nvars());
    for (e, c) in op.raw_terms() {
        let mut q = k.q.clone();
        for l in lay.letters(e).into_iter().rev() {
            q = apply_letter_poly(&k.params, l, &q);
        }
        acc.add_scaled(&q, *c);
    }
    acc.prune(k.settings.drop_rel);
    k.checked(acc)
}

/// Exact Gaussian integral of the kernel's diagonal over the requested domain.
pub fn gaussian_moment_integrate(k: &KernelPolynomial, domain: IntegrationDomain) -> Result<C64> {
    let p = &k.params;
    if domain == IntegrationDomain::FullDiagonalSlice && p.nh() > 0 {
        return Err(Error::NonIntegrable("the horizontal diagonal of P is constant".into()));
    }
    let lay = KernelLayout::new(p);
    let prefactor: f64 = p.a.iter().map(|a| a / (2.0 * PI)).product();
    let mut acc = C64::new(0.0, 0.0);
    'terms: for (e, c) in k.q.iter() {
        for i in 0..lay.nh {
            for v in [KVar::Z(i), KVar::Zbar(i), KVar::Zp(i), KVar::Zbarp(i)] {
                if e[lay.slot(v)] != 0 {
                    continue 'terms;
                }
            }
        }
        let mut m = *c;
        for (j, a) in p.a_perp.iter().enumerate() {
            let pow = e[lay.slot(KVar::Zperp(j))] as u32 + e[lay.slot(KVar::Zperpp(j))] as u32;
            if pow % 2 == 1 {
                continue 'terms;
            }
            // int t^{2k} sqrt(a/pi) e^{-a t^2} dt = (2k-1)!! / (2a)^k
            let kk = pow / 2;
            m *= odd_double_factorial(kk) / (2.0 * a).powi(kk as i32);
        }
        if !m.re.is_finite() || !m.im.is_finite() {
            return Err(Error::NonIntegrable("non-finite moment".into()));
        }
        acc += m;
    }
    Ok(acc * prefactor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn bplus_kills_p() {
        let p = ModelParams::kahler_standard(2, 1).unwrap();
        let k = KernelPolynomial::identity(&p);
        let op = LadderPolynomial::letter(&p, Letter::BPlus(0)).unwrap();
        assert!(apply_to_kernel(&op, &k).unwrap().is_zero());
        let op = LadderPolynomial::letter(&p, Letter::BPerpPlus(0)).unwrap();
        assert!(apply_to_kernel(&op, &k).unwrap().is_zero());
    }

    #[test]
    fn b_on_p() {
        let p = ModelParams::new(2, 1, vec![1.7], vec![2.0]).unwrap();
        let k = KernelPolynomial::identity(&p);
        let op = LadderPolynomial::letter(&p, Letter::B(0)).unwrap();
        let out = apply_to_kernel(&op, &k).unwrap();
        assert_eq!(out.coeff(&[(KVar::Zbar(0), 1)]), c(1.7));
        assert_eq!(out.coeff(&[(KVar::Zbarp(0), 1)]), c(-1.7));
        assert_eq!(out.q().len(), 2);
    }

    #[test]
    fn bperp_squared_at_origin() {
        let p = ModelParams::kahler_standard(1, 1).unwrap();
        let k = KernelPolynomial::identity(&p);
        let op = LadderPolynomial::word(&p, &[Letter::BPerp(0), Letter::BPerp(0)], c(1.0)).unwrap();
        let out = apply_to_kernel(&op, &k).unwrap();
        // value of q at Z = 0 with the Gaussian e^{-pi Z^2} factored out
        let v = out.q().eval(&[c(0.0), c(0.0)]);
        assert!((v - c(-4.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn identity_values() {
        let p = ModelParams::kahler_standard(1, 1).unwrap();
        let k = KernelPolynomial::identity(&p);
        let v = k.eval(&[0.0], &[0.0]).unwrap();
        assert!((v.re - 2f64.sqrt()).abs() < 1e-15);
        let v = k.eval(&[0.3], &[0.3]).unwrap();
        assert!((v.re - 2f64.sqrt() * (-2.0 * PI * 0.09).exp()).abs() < 1e-15);
        assert!(k.eval(&[0.0, 1.0], &[0.0]).is_err());
        let q = ModelParams::new(2, 0, vec![1.0, 3.0], vec![]).unwrap();
        let z = [0.4, -0.2, 1.1, 0.3];
        let v = KernelPolynomial::identity(&q).eval(&z, &z).unwrap();
        assert!((v.re - 3.0 / (4.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn moments() {
        let p = ModelParams::kahler_standard(1, 1).unwrap();
        let id = KernelPolynomial::identity(&p);
        assert!((gaussian_moment_integrate(&id, IntegrationDomain::DiagonalNormal).unwrap() - c(1.0)).norm() < 1e-15);
        let z2 = KernelPolynomial::var(&p, KVar::Zperp(0)).mul_poly(&Poly::var(2, 0)).unwrap();
        let m = gaussian_moment_integrate(&z2, IntegrationDomain::DiagonalNormal).unwrap();
        assert!((m - c(1.0 / (4.0 * PI))).norm() < 1e-15);
        let zero = KernelPolynomial::zero(&p);
        assert_eq!(gaussian_moment_integrate(&zero, IntegrationDomain::FullDiagonalSlice).unwrap(), c(0.0));
        let h = ModelParams::kahler_standard(2, 1).unwrap();
        assert!(gaussian_moment_integrate(&KernelPolynomial::identity(&h), IntegrationDomain::FullDiagonalSlice).is_err());
    }

    #[test]
    fn adjoint_matches_pointwise_conjugation() {
        let p = ModelParams::new(2, 1, vec![1.3], vec![0.8]).unwrap();
        let lay = KernelLayout::new(&p);
        let mut q = Poly::zero(lay.len());
        q.add_term(vec![1, 0, 2, 0, 1, 1], C64::new(0.3, 0.7));
        q.add_term(vec![0, 2, 0, 1, 0, 0], C64::new(-1.1, 0.2));
        let k = KernelPolynomial::from_poly(&p, q).unwrap();
        let (x, y) = ([0.2, -0.4, 0.5], [-0.3, 0.1, 0.9]);
        let lhs = k.adjoint().eval(&x, &y).unwrap();
        let rhs = k.eval(&y, &x).unwrap().conj();
        assert!((lhs - rhs).norm() < 1e-14);
    }
}
