use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::kernel::{KVar, KernelLayout, KernelPolynomial};
use super::ladder::Letter;
use super::params::ModelParams;
use super::poly::Poly;
use crate::numeric::binomial;
use crate::{Error, Result};

/// Decomposition `K = sum b^alpha bperp^gamma (f P)` with each `f` holomorphic in `z`
/// and free of unprimed normal coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenForm {
    params: ModelParams,
    components: BTreeMap<(Vec<u8>, Vec<u8>), Poly>,
}

/// Selects the spectral operation of [`project_and_resolve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMode {
    /// Keep the kernel component only.
    Project,
    /// Apply the inverse model operator `m` times on the complement of the kernel.
    Resolve(u32),
}

type Components = BTreeMap<Vec<u8>, Poly>;

impl EigenForm {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Components keyed by `(alpha, gamma)`.
    pub fn components(&self) -> &BTreeMap<(Vec<u8>, Vec<u8>), Poly> {
        &self.components
    }

    pub fn component(&self, alpha: &[u8], gamma: &[u8]) -> Option<&Poly> {
        self.components.get(&(alpha.to_vec(), gamma.to_vec()))
    }

    /// Eigenvalue of the model operator on a component.
    pub fn eigenvalue(&self, alpha: &[u8], gamma: &[u8]) -> f64 {
        self.params.eigenvalue(alpha, gamma)
    }

    /// Kernel of a single component `b^alpha bperp^gamma (f P)`.
    pub fn component_kernel(&self, alpha: &[u8], gamma: &[u8], f: &Poly) -> Result<KernelPolynomial> {
        let mut k = KernelPolynomial::from_poly(&self.params, f.clone())?;
        for (i, &n) in alpha.iter().enumerate() {
            for _ in 0..n {
                k = k.apply_letter(Letter::B(i))?;
            }
        }
        for (j, &n) in gamma.iter().enumerate() {
            for _ in 0..n {
                k = k.apply_letter(Letter::BPerp(j))?;
            }
        }
        Ok(k)
    }

    fn assemble<F: Fn(&[u8], &[u8]) -> Option<f64>>(&self, weight: F) -> Result<KernelPolynomial> {
        let mut acc = KernelPolynomial::zero(&self.params);
        for ((alpha, gamma), f) in &self.components {
            if let Some(w) = weight(alpha, gamma) {
                let k = self.component_kernel(alpha, gamma, f)?;
                acc = acc.add(&k.scale(C64::new(w, 0.0)))?;
            }
        }
        Ok(acc)
    }

    /// Reassemble the kernel.
    pub fn to_kernel(&self) -> Result<KernelPolynomial> {
        self.assemble(|_, _| Some(1.0))
    }

    /// Kernel component only.
    pub fn project(&self) -> Result<KernelPolynomial> {
        self.assemble(|a, g| if a.iter().chain(g).all(|&k| k == 0) { Some(1.0) } else { None })
    }

    /// `(L)^{-m}` on the orthogonal complement of the kernel.
    pub fn resolve(&self, m: u32) -> Result<KernelPolynomial> {
        let p = self.params.clone();
        self.assemble(move |a, g| {
            let lam = p.eigenvalue(a, g);
            if lam == 0.0 {
                None
            } else {
                Some(lam.powi(-(m as i32)))
            }
        })
    }
}

/// Spectral decomposition of a kernel under the model operator.
pub fn to_eigen_form(k: &KernelPolynomial) -> Result<EigenForm> {
    let params = k.params().clone();
    let lay = KernelLayout::new(&params);
    let (nh, n0) = (lay.nh, lay.n0);
    // zbar_i = w_i + zbar'_i, with w_i stored in the zbar slot
    let mut shifted = Poly::zero(lay.len());
    for (e, c) in k.q().iter() {
        let mut partial: Vec<(Vec<u8>, C64)> = vec![(e.clone(), *c)];
        for i in 0..nh {
            let s = lay.slot(KVar::Zbar(i));
            let sp = lay.slot(KVar::Zbarp(i));
            let mut next = Vec::new();
            for (e0, c0) in partial {
                let b = e0[s];
                for kk in 0..=b {
                    let mut e1 = e0.clone();
                    e1[s] = kk;
                    e1[sp] += b - kk;
                    next.push((e1, c0 * binomial(b as u64, kk as u64)));
                }
            }
            partial = next;
        }
        for (e1, c1) in partial {
            shifted.add_term(e1, c1);
        }
    }

    let mut memo: HashMap<Vec<u8>, Components> = HashMap::new();
    let mut total: Components = BTreeMap::new();
    for (e, c) in shifted.iter() {
        let comps = expand(&params, &lay, e, &mut memo);
        for (key, f) in comps {
            total.entry(key).or_insert_with(|| Poly::zero(lay.len())).add_scaled(&f, *c);
        }
    }
    let mut components = BTreeMap::new();
    for (key, mut f) in total {
        f.prune(1e-14);
        if !f.is_zero() {
            components.insert((key[..nh].to_vec(), key[nh..nh + n0].to_vec()), f);
        }
    }
    Ok(EigenForm { params, components })
}

fn expand(params: &ModelParams, lay: &KernelLayout, e: &[u8], memo: &mut HashMap<Vec<u8>, Components>) -> Components {
    if let Some(v) = memo.get(e) {
        return v.clone();
    }
    let (nh, n0) = (lay.nh, lay.n0);
    let mut out: Components = BTreeMap::new();
    let add = |out: &mut Components, comps: &Components, shift: Option<usize>, s: f64| {
        for (key, f) in comps {
            let mut k2 = key.clone();
            if let Some(idx) = shift {
                k2[idx] += 1;
            }
            out.entry(k2).or_insert_with(|| Poly::zero(lay.len())).add_scaled(f, C64::new(s, 0.0));
        }
    };
    if let Some(i) = (0..nh).find(|&i| e[lay.slot(KVar::Zbar(i))] > 0) {
        // w g P = (b (g P) + 2 (dg/dz) P) / a
        let a = params.a[i];
        let mut g = e.to_vec();
        g[lay.slot(KVar::Zbar(i))] -= 1;
        let eg = expand(params, lay, &g, memo);
        add(&mut out, &eg, Some(i), 1.0 / a);
        let kz = g[lay.slot(KVar::Z(i))];
        if kz > 0 {
            let mut dg = g.clone();
            dg[lay.slot(KVar::Z(i))] -= 1;
            let edg = expand(params, lay, &dg, memo);
            add(&mut out, &edg, None, 2.0 * kz as f64 / a);
        }
    } else if let Some(j) = (0..n0).find(|&j| e[lay.slot(KVar::Zperp(j))] > 0) {
        // Z g P = (bperp (g P) + (dg/dZ) P) / (2 a_perp)
        let a = params.a_perp[j];
        let mut g = e.to_vec();
        g[lay.slot(KVar::Zperp(j))] -= 1;
        let eg = expand(params, lay, &g, memo);
        add(&mut out, &eg, Some(nh + j), 1.0 / (2.0 * a));
        let kz = g[lay.slot(KVar::Zperp(j))];
        if kz > 0 {
            let mut dg = g.clone();
            dg[lay.slot(KVar::Zperp(j))] -= 1;
            let edg = expand(params, lay, &dg, memo);
            add(&mut out, &edg, None, kz as f64 / (2.0 * a));
        }
    } else {
        out.insert(vec![0; nh + n0], Poly::monomial(e.to_vec(), C64::new(1.0, 0.0)));
    }
    memo.insert(e.to_vec(), out.clone());
    out
}

/// Projection onto the kernel of the model operator, or the iterated resolvent on its
/// complement.
pub fn project_and_resolve(k: &KernelPolynomial, mode: SpectralMode) -> Result<KernelPolynomial> {
    let ef = to_eigen_form(k)?;
    match mode {
        SpectralMode::Project => ef.project(),
        SpectralMode::Resolve(m) if m == 1 || m == 2 => ef.resolve(m),
        SpectralMode::Resolve(m) => Err(Error::InvalidArgument(format!("resolvent power {m} not in {{1, 2}}"))),
    }
}
