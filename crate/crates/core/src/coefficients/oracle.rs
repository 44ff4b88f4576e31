//! Independent matrix oracle for the coefficient kernels.
//!
//! Operators become sparse matrices on the orthonormal eigenbasis of the model operator,
//! truncated at total degree `N`. Basis vectors are `b^alpha z^beta bperp^gamma G`, with
//! `G` the Gaussian ground state; their norms are known in closed form. The resolvent
//! formulas are composed by matrix-vector products and the resulting kernel is evaluated
//! by summing eigenfunction values. Nothing here uses the kernel-polynomial engine.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64 as C64;

use rand::Rng;

use crate::model::{normal_order, LadderPolynomial, Letter, ModelParams, ModelPoint};
use crate::numeric::{binomial, factorial, ln_factorial};
use crate::{Error, Result};

/// Basis label `(alpha, beta, gamma)` flattened.
type State = Vec<u8>;
// ordered so that sums do not depend on the hasher seed
type SVec = BTreeMap<State, C64>;

fn add_to(v: &mut SVec, s: State, c: C64) {
    *v.entry(s).or_default() += c;
}

fn axpy(y: &mut SVec, x: &SVec, s: C64) {
    for (k, c) in x {
        add_to(y, k.clone(), c * s);
    }
}

struct Basis {
    params: ModelParams,
    nh: usize,
    n0: usize,
    cap: usize,
}

impl Basis {
    fn degree(&self, s: &[u8]) -> usize {
        s.iter().map(|&x| x as usize).sum()
    }

    /// `ln |b^alpha z^beta bperp^gamma G|`.
    fn ln_norm(&self, s: &[u8]) -> f64 {
        let mut ln2 = 0.0;
        for i in 0..self.nh {
            let a = self.params.a[i];
            let (al, be) = (s[i] as u64, s[self.nh + i] as u64);
            ln2 += al as f64 * (2.0 * a).ln() + ln_factorial(al);
            ln2 += std::f64::consts::PI.ln() + ln_factorial(be) + (be + 1) as f64 * (2.0 / a).ln();
        }
        for j in 0..self.n0 {
            let a = self.params.a_perp[j];
            let g = s[2 * self.nh + j] as u64;
            ln2 += g as f64 * (2.0 * a).ln() + ln_factorial(g) + 0.5 * (std::f64::consts::PI / a).ln();
        }
        0.5 * ln2
    }

    fn eigenvalue(&self, s: &[u8]) -> f64 {
        let h: f64 = (0..self.nh).map(|i| 2.0 * s[i] as f64 * self.params.a[i]).sum();
        let n: f64 = (0..self.n0).map(|j| 2.0 * s[2 * self.nh + j] as f64 * self.params.a_perp[j]).sum();
        h + n
    }

    fn is_ground(&self, s: &[u8]) -> bool {
        (0..self.nh).all(|i| s[i] == 0) && (0..self.n0).all(|j| s[2 * self.nh + j] == 0)
    }

    /// One letter on an unnormalized state, as a combination of unnormalized states.
    fn letter(&self, l: Letter, s: &State) -> Vec<(State, C64)> {
        let (nh, n0) = (self.nh, self.n0);
        let c = |x: f64| C64::new(x, 0.0);
        let bump = |idx: usize, up: bool| -> State {
            let mut t = s.clone();
            if up {
                t[idx] += 1;
            } else {
                t[idx] -= 1;
            }
            t
        };
        let mut out = Vec::with_capacity(2);
        match l {
            Letter::B(i) => out.push((bump(i, true), c(1.0))),
            Letter::BPlus(i) => {
                if s[i] > 0 {
                    out.push((bump(i, false), c(2.0 * self.params.a[i] * s[i] as f64)));
                }
            }
            Letter::Z(i) => {
                out.push((bump(nh + i, true), c(1.0)));
                if s[i] > 0 {
                    out.push((bump(i, false), c(2.0 * s[i] as f64)));
                }
            }
            Letter::Zbar(i) => {
                let a = self.params.a[i];
                out.push((bump(i, true), c(1.0 / a)));
                if s[nh + i] > 0 {
                    out.push((bump(nh + i, false), c(2.0 * s[nh + i] as f64 / a)));
                }
            }
            Letter::BPerp(j) => out.push((bump(2 * nh + j, true), c(1.0))),
            Letter::BPerpPlus(j) => {
                let g = s[2 * nh + j];
                if g > 0 {
                    out.push((bump(2 * nh + j, false), c(2.0 * self.params.a_perp[j] * g as f64)));
                }
            }
            Letter::Zperp(j) => {
                let a = self.params.a_perp[j];
                out.push((bump(2 * nh + j, true), c(1.0 / (2.0 * a))));
                let g = s[2 * nh + j];
                if g > 0 {
                    out.push((bump(2 * nh + j, false), c(g as f64)));
                }
            }
        }
        debug_assert!(out.iter().all(|(t, _)| t.len() == 2 * nh + n0));
        out
    }

    /// Possible index displacements of one letter.
    fn shifts(&self, l: Letter) -> Vec<Vec<i32>> {
        let dim = 2 * self.nh + self.n0;
        let unit = |idx: usize, d: i32| {
            let mut v = vec![0; dim];
            v[idx] = d;
            v
        };
        let nh = self.nh;
        match l {
            Letter::B(i) => vec![unit(i, 1)],
            Letter::BPlus(i) => vec![unit(i, -1)],
            Letter::Z(i) => vec![unit(nh + i, 1), unit(i, -1)],
            Letter::Zbar(i) => vec![unit(i, 1), unit(nh + i, -1)],
            Letter::BPerp(j) => vec![unit(2 * nh + j, 1)],
            Letter::BPerpPlus(j) => vec![unit(2 * nh + j, -1)],
            Letter::Zperp(j) => vec![unit(2 * nh + j, 1), unit(2 * nh + j, -1)],
        }
    }

    /// Value of the orthonormal eigenfunction at `z`.
    fn value(&self, s: &[u8], z: &ModelPoint) -> C64 {
        let mut v = C64::new((-self.ln_norm(s)).exp(), 0.0);
        for i in 0..self.nh {
            let a = self.params.a[i];
            let (al, be) = (s[i] as u32, s[self.nh + i] as u32);
            let w = z.z[i];
            // b^alpha (z^beta G) = sum_k C(alpha,k) C(beta,k) k! (-2)^k a^{alpha-k} z^{beta-k} zbar^{alpha-k} G
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..=al.min(be) {
                let coef = binomial(al as u64, k as u64) * binomial(be as u64, k as u64) * factorial(k as u64)
                    * (-2f64).powi(k as i32)
                    * a.powi((al - k) as i32);
                acc += w.powu(be - k) * w.conj().powu(al - k) * coef;
            }
            v *= acc * (-a * w.norm_sqr() / 4.0).exp();
        }
        for j in 0..self.n0 {
            let a = self.params.a_perp[j];
            let g = s[2 * self.nh + j] as usize;
            let t = z.zperp[j];
            v *= a.powf(g as f64 / 2.0) * hermite(g, a.sqrt() * t) * (-a * t * t / 2.0).exp();
        }
        v
    }
}

/// Physicists' Hermite polynomial.
fn hermite(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Truncated sparse matrix of a ladder polynomial, with lazily cached columns.
struct MatOp<'b> {
    basis: &'b Basis,
    words: Vec<(Vec<Letter>, C64)>,
    shifts: Vec<Vec<i32>>,
    cols: RefCell<BTreeMap<State, SVec>>,
}

impl<'b> MatOp<'b> {
    fn new(basis: &'b Basis, op: &LadderPolynomial) -> Self {
        let words: Vec<_> = op.terms().collect();
        let mut set = BTreeSet::new();
        let dim = 2 * basis.nh + basis.n0;
        for (w, _) in &words {
            let mut acc: BTreeSet<Vec<i32>> = BTreeSet::from([vec![0; dim]]);
            for &l in w {
                let mut next = BTreeSet::new();
                for d in &acc {
                    for s in basis.shifts(l) {
                        next.insert(d.iter().zip(&s).map(|(x, y)| x + y).collect());
                    }
                }
                acc = next;
            }
            set.extend(acc);
        }
        Self { basis, words, shifts: set.into_iter().collect(), cols: RefCell::new(BTreeMap::new()) }
    }

    /// `O e_x` in the orthonormal basis, truncated to degree `N`.
    fn column(&self, x: &State) -> SVec {
        if let Some(c) = self.cols.borrow().get(x) {
            return c.clone();
        }
        let mut raw: SVec = BTreeMap::new();
        for (w, c) in &self.words {
            let mut cur: Vec<(State, C64)> = vec![(x.clone(), *c)];
            for &l in w.iter().rev() {
                let mut next: SVec = BTreeMap::new();
                for (s, cs) in &cur {
                    for (t, ct) in self.basis.letter(l, s) {
                        add_to(&mut next, t, cs * ct);
                    }
                }
                cur = next.into_iter().collect();
            }
            for (s, cs) in cur {
                add_to(&mut raw, s, cs);
            }
        }
        let lx = self.basis.ln_norm(x);
        let mut out = BTreeMap::new();
        for (s, c) in raw {
            if self.basis.degree(&s) <= self.basis.cap && c.norm() != 0.0 {
                let r = (self.basis.ln_norm(&s) - lx).exp();
                out.insert(s, c * r);
            }
        }
        self.cols.borrow_mut().insert(x.clone(), out.clone());
        out
    }

    /// `O v` for a column vector.
    fn apply(&self, v: &SVec) -> SVec {
        let mut out = BTreeMap::new();
        for (x, c) in v {
            axpy(&mut out, &self.column(x), *c);
        }
        out
    }

    /// `y^T O` for a row vector, using only columns of `O`.
    fn apply_row(&self, y: &SVec) -> SVec {
        let mut out: SVec = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for v in y.keys() {
            for d in &self.shifts {
                let cand: Option<State> = v
                    .iter()
                    .zip(d)
                    .map(|(&a, &b)| u8::try_from(a as i32 - b).ok())
                    .collect();
                let Some(x) = cand else { continue };
                if self.basis.degree(&x) > self.basis.cap || !seen.insert(x.clone()) {
                    continue;
                }
                let col = self.column(&x);
                let mut e = C64::new(0.0, 0.0);
                for (u, cu) in y {
                    if let Some(m) = col.get(u) {
                        e += cu * m;
                    }
                }
                if e.norm() != 0.0 {
                    out.insert(x, e);
                }
            }
        }
        out
    }
}

fn resolve(basis: &Basis, v: &SVec, m: i32) -> SVec {
    v.iter()
        .filter(|(s, _)| !basis.is_ground(s))
        .map(|(s, c)| (s.clone(), c / basis.eigenvalue(s).powi(m)))
        .collect()
}

fn project(basis: &Basis, v: &SVec) -> SVec {
    v.iter().filter(|(s, _)| basis.is_ground(s)).map(|(s, c)| (s.clone(), *c)).collect()
}

/// Kernel `sum over pairs of (sum_u c_u e_u(Z)) (sum_w r_w conj e_w(Z'))`.
pub struct BruteForceKernel {
    basis: Basis,
    pairs: Vec<(SVec, SVec)>,
}

impl BruteForceKernel {
    pub fn eval_at(&self, z: &ModelPoint, zp: &ModelPoint) -> Result<C64> {
        let p = &self.basis.params;
        for pt in [z, zp] {
            if pt.z.len() != p.nh() || pt.zperp.len() != p.n0 {
                return Err(Error::DimensionMismatch { expected: p.point_dim(), got: 2 * pt.z.len() + pt.zperp.len() });
            }
        }
        let mut cache_z: BTreeMap<&State, C64> = BTreeMap::new();
        let mut cache_zp: BTreeMap<&State, C64> = BTreeMap::new();
        let mut total = C64::new(0.0, 0.0);
        for (col, row) in &self.pairs {
            let mut left = C64::new(0.0, 0.0);
            for (s, c) in col {
                left += c * *cache_z.entry(s).or_insert_with(|| self.basis.value(s, z));
            }
            if left.norm() == 0.0 {
                continue;
            }
            let mut right = C64::new(0.0, 0.0);
            for (s, c) in row {
                right += c * cache_zp.entry(s).or_insert_with(|| self.basis.value(s, zp)).conj();
            }
            total += left * right;
        }
        Ok(total)
    }

    /// Values at real split coordinates.
    pub fn eval(&self, z: &[f64], zp: &[f64]) -> Result<C64> {
        let a = ModelPoint::from_real(&self.basis.params, z)?;
        let b = ModelPoint::from_real(&self.basis.params, zp)?;
        self.eval_at(&a, &b)
    }

    /// Integral of the diagonal over the normal slice `Z = Z' = (0, Zperp)` by tensor
    /// Gauss-Legendre quadrature on `[-half_width, half_width]^n0`.
    pub fn normal_slice_integral(&self, order: usize, half_width: f64) -> Result<C64> {
        let p = &self.basis.params;
        let nodes = crate::numeric::gauss_legendre(order, -half_width, half_width);
        let n0 = p.n0;
        let mut idx = vec![0usize; n0];
        let mut total = C64::new(0.0, 0.0);
        loop {
            let mut w = 1.0;
            let mut pt = ModelPoint::origin(p);
            for (j, &k) in idx.iter().enumerate() {
                pt.zperp[j] = nodes[k].0;
                w *= nodes[k].1;
            }
            total += self.eval_at(&pt, &pt)? * w;
            let mut j = 0;
            loop {
                if j == n0 {
                    return Ok(total);
                }
                idx[j] += 1;
                if idx[j] < nodes.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    /// Dense samples on a list of point pairs.
    pub fn samples(&self, grid: &[(ModelPoint, ModelPoint)]) -> Result<Vec<C64>> {
        grid.iter().map(|(z, zp)| self.eval_at(z, zp)).collect()
    }
}

fn make_basis(params: &ModelParams, cap: usize) -> Result<Basis> {
    if cap > 120 {
        return Err(Error::IllConditioned(format!("truncation {cap} too large for double precision norms")));
    }
    Ok(Basis { params: params.clone(), nh: params.nh(), n0: params.n0, cap })
}

fn ground_states(basis: &Basis) -> Vec<State> {
    let dim = 2 * basis.nh + basis.n0;
    let mut out = vec![vec![0u8; dim]];
    for i in 0..basis.nh {
        let mut next = Vec::new();
        for s in &out {
            let used = basis.degree(s);
            for b in 0..=(basis.cap - used) {
                let mut t = s.clone();
                t[basis.nh + i] = b as u8;
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn unit(s: &State) -> SVec {
    BTreeMap::from([(s.clone(), C64::new(1.0, 0.0))])
}

fn neg(v: SVec) -> SVec {
    v.into_iter().map(|(s, c)| (s, -c)).collect()
}

/// `P^(r)` by truncated matrix algebra on the eigenbasis, truncation degree `n_trunc`.
pub fn brute_force_coefficient(
    r: u32,
    o1: &LadderPolynomial,
    o2: &LadderPolynomial,
    n_trunc: usize,
) -> Result<BruteForceKernel> {
    if o1.params() != o2.params() {
        return Err(Error::ParamMismatch);
    }
    let need = o1.degree().max(o2.degree()) + 4;
    if n_trunc < need {
        return Err(Error::InvalidArgument(format!("truncation {n_trunc} below operator degree + 4 = {need}")));
    }
    let basis = make_basis(o1.params(), n_trunc)?;
    let m1 = MatOp::new(&basis, o1);
    let m2 = MatOp::new(&basis, o2);
    let mut pairs = Vec::new();
    for g in ground_states(&basis) {
        let e = unit(&g);
        match r {
            1 => {
                pairs.push((neg(resolve(&basis, &m1.apply(&e), 1)), e.clone()));
                pairs.push((e.clone(), neg(resolve(&basis, &m1.apply_row(&e), 1))));
            }
            2 => {
                let c1 = resolve(&basis, &m1.apply(&e), 1);
                let r1 = resolve(&basis, &m1.apply_row(&e), 1);
                pairs.push((resolve(&basis, &m1.apply(&c1), 1), e.clone()));
                pairs.push((e.clone(), resolve(&basis, &m1.apply_row(&r1), 1)));
                pairs.push((neg(resolve(&basis, &m2.apply(&e), 1)), e.clone()));
                pairs.push((e.clone(), neg(resolve(&basis, &m2.apply_row(&e), 1))));
                let t6 = project(&basis, &m1.apply(&resolve(&basis, &m1.apply(&e), 2)));
                pairs.push((neg(t6), e.clone()));
                pairs.push((c1, r1));
            }
            _ => return Err(Error::InvalidArgument(format!("coefficient order {r} not in {{1, 2}}"))),
        }
    }
    pairs.retain(|(c, w)| !c.is_empty() && !w.is_empty());
    Ok(BruteForceKernel { basis, pairs })
}

/// Largest matrix entry of `P O1 P` on the truncated basis.
/// Random self-adjoint operator `X + X^*` with `terms` words of length at most `max_degree`
/// over every generator, coefficients uniform in the unit square.
pub fn random_self_adjoint<R: Rng>(
    params: &ModelParams,
    rng: &mut R,
    max_degree: usize,
    terms: usize,
) -> Result<LadderPolynomial> {
    let mut letters = vec![];
    for i in 0..params.nh() {
        letters.extend([Letter::Z(i), Letter::Zbar(i), Letter::B(i), Letter::BPlus(i)]);
    }
    for j in 0..params.n0 {
        letters.extend([Letter::Zperp(j), Letter::BPerp(j), Letter::BPerpPlus(j)]);
    }
    if letters.is_empty() || max_degree == 0 {
        return Ok(LadderPolynomial::zero(params));
    }
    let words: Vec<(Vec<Letter>, C64)> = (0..terms)
        .map(|_| {
            let d = rng.gen_range(1..=max_degree);
            let w = (0..d).map(|_| letters[rng.gen_range(0..letters.len())]).collect();
            (w, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        })
        .collect();
    let x = normal_order(params, &words)?;
    x.add(&x.adjoint()?)
}

pub fn triple_product_max(o1: &LadderPolynomial, n_trunc: usize) -> Result<f64> {
    let basis = make_basis(o1.params(), n_trunc)?;
    let m1 = MatOp::new(&basis, o1);
    let mut worst: f64 = 0.0;
    for g in ground_states(&basis) {
        for c in project(&basis, &m1.column(&g)).values() {
            worst = worst.max(c.norm());
        }
    }
    Ok(worst)
}

/// The model kernel from the truncated basis alone; used to check the oracle itself.
pub fn truncated_projection(params: &ModelParams, n_trunc: usize) -> Result<BruteForceKernel> {
    let basis = make_basis(params, n_trunc)?;
    let pairs = ground_states(&basis).into_iter().map(|g| (unit(&g), unit(&g))).collect();
    Ok(BruteForceKernel { basis, pairs })
}
