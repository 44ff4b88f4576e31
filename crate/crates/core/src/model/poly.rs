use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

/// Sparse multivariate polynomial with complex coefficients, keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u8>, C64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C64::new(1.0, 0.0))
    }

    pub fn monomial(exps: Vec<u8>, c: C64) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    /// The single variable `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, C64::new(1.0, 0.0))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    #[allow(clippy::len_without_is_empty)] // `is_zero` plays that role
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u8>, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u8]) -> C64 {
        self.terms.get(exps).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, exps: Vec<u8>, c: C64) {
        debug_assert_eq!(exps.len(), self.nvars);
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let e = self.terms.entry(exps).or_default();
        *e += c;
    }

    pub fn add_assign(&mut self, other: &Poly) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), *c);
        }
    }

    pub fn add_scaled(&mut self, other: &Poly, s: C64) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c * s);
        }
    }

    pub fn scale(&self, s: C64) -> Poly {
        let mut out = Poly::zero(self.nvars);
        out.add_scaled(self, s);
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u8> = e1.iter().zip(e2).map(|(x, y)| x + y).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    /// Multiply by `x_i`.
    pub fn mul_var(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut e = e.clone();
            e[i] += 1;
            out.terms.insert(e, *c);
        }
        out
    }

    /// Partial derivative in `x_i`.
    pub fn deriv(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                let k = e2[i];
                e2[i] -= 1;
                out.add_term(e2, c * k as f64);
            }
        }
        out
    }

    /// Total degree, `0` for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&k| k as usize).sum()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Remove terms below `rel` times the largest coefficient magnitude.
    pub fn prune(&mut self, rel: f64) {
        let m = self.max_abs_coeff();
        let cut = rel * m;
        self.terms.retain(|_, c| c.norm() > cut && c.norm() > 0.0);
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= xi.powu(k as u32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Apply `f` to each exponent vector; coefficients of colliding images add.
    pub fn map_monomials<F: FnMut(&[u8], C64) -> (Vec<u8>, C64)>(&self, nvars: usize, mut f: F) -> Poly {
        let mut out = Poly::zero(nvars);
        for (e, c) in &self.terms {
            let (e2, c2) = f(e, *c);
            out.add_term(e2, c2);
        }
        out
    }

    /// Largest coefficient difference, used by tests and round-trip checks.
    pub fn max_diff(&self, other: &Poly) -> f64 {
        let mut d = 0.0f64;
        for (e, c) in &self.terms {
            d = d.max((c - other.coeff(e)).norm());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                d = d.max(c.norm());
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn product_and_derivative() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let mut s = x.clone();
        s.add_assign(&y);
        let sq = s.mul(&s);
        assert_eq!(sq.coeff(&[1, 1]), c(2.0));
        assert_eq!(sq.deriv(0).coeff(&[1, 0]), c(2.0));
        assert_eq!(sq.degree(), 2);
        let v = sq.eval(&[c(1.0), c(2.0)]);
        assert_eq!(v, c(9.0));
    }

    #[test]
    fn prune_is_relative() {
        let mut p = Poly::monomial(vec![1], c(1.0));
        p.add_term(vec![0], c(1e-16));
        p.prune(1e-14);
        assert_eq!(p.len(), 1);
    }
}
