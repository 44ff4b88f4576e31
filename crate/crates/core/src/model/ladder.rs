use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::{Error, Result};

/// One generator of the ladder algebra.
///
/// `Z`, `Zbar` and `Zperp` are coordinate multipliers; `B`, `BPlus`, `BPerp` and
/// `BPerpPlus` are the first-order ladder operators
/// `b_i = -2 d/dz_i + (a_i/2) zbar_i`, `b+_i = 2 d/dzbar_i + (a_i/2) z_i`,
/// `bperp_j = -d/dZ_j + a_perp_j Z_j`, `bperp+_j = d/dZ_j + a_perp_j Z_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    Z(usize),
    Zbar(usize),
    Zperp(usize),
    B(usize),
    BPlus(usize),
    BPerp(usize),
    BPerpPlus(usize),
}

impl Letter {
    /// Formal adjoint of the generator.
    pub fn adjoint(self) -> Letter {
        match self {
            Letter::Z(i) => Letter::Zbar(i),
            Letter::Zbar(i) => Letter::Z(i),
            Letter::Zperp(j) => Letter::Zperp(j),
            Letter::B(i) => Letter::BPlus(i),
            Letter::BPlus(i) => Letter::B(i),
            Letter::BPerp(j) => Letter::BPerpPlus(j),
            Letter::BPerpPlus(j) => Letter::BPerp(j),
        }
    }

    fn check(self, params: &ModelParams) -> Result<()> {
        let (idx, bound) = match self {
            Letter::Z(i) | Letter::Zbar(i) | Letter::B(i) | Letter::BPlus(i) => (i, params.nh()),
            Letter::Zperp(j) | Letter::BPerp(j) | Letter::BPerpPlus(j) => (j, params.n0),
        };
        if idx >= bound {
            return Err(Error::InvalidArgument(format!("letter {self:?} out of range {bound}")));
        }
        Ok(())
    }
}

/// Relative drop threshold and degree cap used by symbolic arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraSettings {
    pub drop_rel: f64,
    pub degree_cap: usize,
}

impl Default for AlgebraSettings {
    fn default() -> Self {
        Self { drop_rel: 1e-14, degree_cap: 24 }
    }
}

/// Position of each generator inside a canonical exponent vector.
///
/// The canonical word is `z^a zbar^b (b+)^c (bperp+)^d b^e (bperp)^f`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct WordLayout {
    pub nh: usize,
    pub n0: usize,
}

impl WordLayout {
    pub fn new(p: &ModelParams) -> Self {
        Self { nh: p.nh(), n0: p.n0 }
    }
    #[allow(clippy::len_without_is_empty)] // `is_zero` plays that role
    pub fn len(&self) -> usize {
        4 * self.nh + 2 * self.n0
    }
    pub fn z(&self, i: usize) -> usize {
        i
    }
    pub fn zb(&self, i: usize) -> usize {
        self.nh + i
    }
    pub fn bplus(&self, i: usize) -> usize {
        2 * self.nh + i
    }
    pub fn bperp_plus(&self, j: usize) -> usize {
        3 * self.nh + j
    }
    pub fn b(&self, i: usize) -> usize {
        3 * self.nh + self.n0 + i
    }
    pub fn bperp(&self, j: usize) -> usize {
        4 * self.nh + self.n0 + j
    }

    /// Letters of a canonical exponent vector, leftmost first.
    pub fn letters(&self, e: &[u8]) -> Vec<Letter> {
        let mut out = Vec::new();
        let mut rep = |l: Letter, k: u8| out.extend(std::iter::repeat(l).take(k as usize));
        for i in 0..self.nh {
            rep(Letter::Z(i), e[self.z(i)]);
        }
        for i in 0..self.nh {
            rep(Letter::Zbar(i), e[self.zb(i)]);
        }
        for i in 0..self.nh {
            rep(Letter::BPlus(i), e[self.bplus(i)]);
        }
        for j in 0..self.n0 {
            rep(Letter::BPerpPlus(j), e[self.bperp_plus(j)]);
        }
        for i in 0..self.nh {
            rep(Letter::B(i), e[self.b(i)]);
        }
        for j in 0..self.n0 {
            rep(Letter::BPerp(j), e[self.bperp(j)]);
        }
        out
    }
}

/// Finite sum of canonical ladder words with complex coefficients.
///
/// Coordinate multipliers `Zperp` never appear in stored words: they are rewritten as
/// `(bperp + bperp+) / (2 a_perp)`, which makes the stored form unique.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderPolynomial {
    params: ModelParams,
    settings: AlgebraSettings,
    terms: BTreeMap<Vec<u8>, C64>,
}

type TermMap = BTreeMap<Vec<u8>, C64>;

impl LadderPolynomial {
    pub fn zero(params: &ModelParams) -> Self {
        Self { params: params.clone(), settings: AlgebraSettings::default(), terms: BTreeMap::new() }
    }

    pub fn constant(params: &ModelParams, c: C64) -> Self {
        let mut p = Self::zero(params);
        let len = WordLayout::new(params).len();
        if c.norm() > 0.0 {
            p.terms.insert(vec![0; len], c);
        }
        p
    }

    pub fn one(params: &ModelParams) -> Self {
        Self::constant(params, C64::new(1.0, 0.0))
    }

    pub fn with_settings(mut self, settings: AlgebraSettings) -> Self {
        self.settings = settings;
        self
    }

    /// Normal-ordered product `c * l_1 l_2 ... l_k`.
    pub fn word(params: &ModelParams, letters: &[Letter], c: C64) -> Result<Self> {
        Self::constant(params, c).left_mul_letters(letters)
    }

    pub fn letter(params: &ModelParams, l: Letter) -> Result<Self> {
        Self::word(params, &[l], C64::new(1.0, 0.0))
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn settings(&self) -> AlgebraSettings {
        self.settings
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Canonical words with their coefficients, in a fixed order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<Letter>, C64)> + '_ {
        let lay = WordLayout::new(&self.params);
        self.terms.iter().map(move |(e, c)| (lay.letters(e), *c))
    }

    pub(crate) fn raw_terms(&self) -> &TermMap {
        &self.terms
    }

    /// Coefficient of a word that is already canonical (zero if absent).
    pub fn coeff(&self, canonical: &[Letter]) -> Result<C64> {
        let w = Self::word(&self.params, canonical, C64::new(1.0, 0.0))?;
        if w.terms.len() != 1 {
            return Err(Error::InvalidArgument("word is not canonical".into()));
        }
        let (k, c) = w.terms.iter().next().expect("one term");
        if (c - C64::new(1.0, 0.0)).norm() > 0.0 {
            return Err(Error::InvalidArgument("word is not canonical".into()));
        }
        Ok(self.terms.get(k).copied().unwrap_or_default())
    }

    /// Largest total degree of a stored word.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&k| k as usize).sum()).max().unwrap_or(0)
    }

    fn same_params(&self, other: &Self) -> Result<()> {
        if self.params != other.params {
            return Err(Error::ParamMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_params(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_default() += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out.prune();
        out
    }

    /// Normal-ordered product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_params(other)?;
        let lay = WordLayout::new(&self.params);
        let mut out = Self::zero(&self.params).with_settings(self.settings);
        for (e, c) in &self.terms {
            let part = other.left_mul_letters(&lay.letters(e))?;
            for (k, v) in part.terms {
                *out.terms.entry(k).or_default() += v * c;
            }
        }
        out.prune();
        Ok(out)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Formal adjoint: reversed words of adjoint letters with conjugated coefficients.
    pub fn adjoint(&self) -> Result<Self> {
        let lay = WordLayout::new(&self.params);
        let mut out = Self::zero(&self.params).with_settings(self.settings);
        for (e, c) in &self.terms {
            let letters: Vec<Letter> = lay.letters(e).into_iter().rev().map(Letter::adjoint).collect();
            let w = Self::word(&self.params, &letters, c.conj())?.with_settings(self.settings);
            for (k, v) in w.terms {
                *out.terms.entry(k).or_default() += v;
            }
        }
        out.prune();
        Ok(out)
    }

    /// `l_1 ... l_k * self`, normal ordered.
    pub fn left_mul_letters(&self, letters: &[Letter]) -> Result<Self> {
        let mut cur = self.clone();
        for &l in letters.iter().rev() {
            l.check(&self.params)?;
            cur = cur.left_mul_letter(l)?;
        }
        Ok(cur)
    }

    fn left_mul_letter(&self, l: Letter) -> Result<Self> {
        let lay = WordLayout::new(&self.params);
        let mut out: TermMap = BTreeMap::new();
        for (e, c) in &self.terms {
            self.push_letter(&lay, l, e, *c, &mut out)?;
        }
        let mut res = Self { params: self.params.clone(), settings: self.settings, terms: out };
        res.prune();
        Ok(res)
    }

    fn push(&self, out: &mut TermMap, e: Vec<u8>, c: C64) -> Result<()> {
        let deg: usize = e.iter().map(|&k| k as usize).sum();
        if deg > self.settings.degree_cap {
            return Err(Error::DegreeOverflow { degree: deg, cap: self.settings.degree_cap });
        }
        *out.entry(e).or_default() += c;
        Ok(())
    }

    fn push_letter(&self, lay: &WordLayout, l: Letter, e: &[u8], c: C64, out: &mut TermMap) -> Result<()> {
        let bump = |slot: usize| {
            let mut v = e.to_vec();
            v[slot] += 1;
            v
        };
        let drop = |slot: usize| {
            let mut v = e.to_vec();
            v[slot] -= 1;
            v
        };
        match l {
            Letter::Z(i) => self.push(out, bump(lay.z(i)), c)?,
            Letter::Zbar(i) => self.push(out, bump(lay.zb(i)), c)?,
            Letter::BPerpPlus(j) => self.push(out, bump(lay.bperp_plus(j)), c)?,
            Letter::BPlus(i) => {
                // [b+_i, zbar_i] = 2
                self.push(out, bump(lay.bplus(i)), c)?;
                let k = e[lay.zb(i)];
                if k > 0 {
                    self.push(out, drop(lay.zb(i)), c * (2.0 * k as f64))?;
                }
            }
            Letter::B(i) => {
                // [b_i, z_i] = -2, [b_i, b+_i] = -2 a_i
                self.push(out, bump(lay.b(i)), c)?;
                let k = e[lay.z(i)];
                if k > 0 {
                    self.push(out, drop(lay.z(i)), c * (-2.0 * k as f64))?;
                }
                let g = e[lay.bplus(i)];
                if g > 0 {
                    self.push(out, drop(lay.bplus(i)), c * (-2.0 * self.params.a[i] * g as f64))?;
                }
            }
            Letter::BPerp(j) => {
                // [bperp_j, bperp+_j] = -2 a_perp_j
                self.push(out, bump(lay.bperp(j)), c)?;
                let d = e[lay.bperp_plus(j)];
                if d > 0 {
                    self.push(out, drop(lay.bperp_plus(j)), c * (-2.0 * self.params.a_perp[j] * d as f64))?;
                }
            }
            Letter::Zperp(j) => {
                let s = c / (2.0 * self.params.a_perp[j]);
                self.push_letter(lay, Letter::BPerp(j), e, s, out)?;
                self.push_letter(lay, Letter::BPerpPlus(j), e, s, out)?;
            }
        }
        Ok(())
    }

    /// `self += s * other` without pruning; call [`Self::finish`] afterwards.
    pub(crate) fn accumulate(&mut self, other: &Self, s: C64) {
        for (e, c) in &other.terms {
            *self.terms.entry(e.clone()).or_default() += c * s;
        }
    }

    pub(crate) fn finish(mut self) -> Self {
        self.prune();
        self
    }

    fn prune(&mut self) {
        let m = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = self.settings.drop_rel * m;
        self.terms.retain(|_, c| c.norm() > cut && c.norm() > 0.0);
    }

    /// Largest coefficient difference to another polynomial on the same parameters.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for (e, c) in &self.terms {
            d = d.max((c - other.terms.get(e).copied().unwrap_or_default()).norm());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                d = d.max(c.norm());
            }
        }
        d
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl fmt::Display for LadderPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (letters, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for l in letters {
                let s = match l {
                    Letter::Z(i) => format!("z{}", i + 1),
                    Letter::Zbar(i) => format!("zb{}", i + 1),
                    Letter::Zperp(j) => format!("Z{}", j + 1),
                    Letter::B(i) => format!("b{}", i + 1),
                    Letter::BPlus(i) => format!("b+{}", i + 1),
                    Letter::BPerp(j) => format!("bp{}", j + 1),
                    Letter::BPerpPlus(j) => format!("bp+{}", j + 1),
                };
                write!(f, " {s}")?;
            }
        }
        Ok(())
    }
}

/// Canonical form of an arbitrary word sum.
pub fn normal_order(params: &ModelParams, words: &[(Vec<Letter>, C64)]) -> Result<LadderPolynomial> {
    let mut out = LadderPolynomial::zero(params);
    for (w, c) in words {
        out.accumulate(&LadderPolynomial::word(params, w, C64::new(1.0, 0.0))?, *c);
    }
    Ok(out.finish())
}

/// The model operator `sum_j b_j b+_j + sum_j bperp_j bperp+_j` on the function block.
pub fn model_operator(params: &ModelParams) -> Result<LadderPolynomial> {
    let one = C64::new(1.0, 0.0);
    let mut words = Vec::new();
    for i in 0..params.nh() {
        words.push((vec![Letter::B(i), Letter::BPlus(i)], one));
    }
    for j in 0..params.n0 {
        words.push((vec![Letter::BPerp(j), Letter::BPerpPlus(j)], one));
    }
    normal_order(params, &words)
}
