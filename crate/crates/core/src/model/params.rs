use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dimensions and eigenvalues of the model operator at a point.
///
/// `a` holds the horizontal eigenvalues (length `n - n0`), `a_perp` the normal ones
/// (length `n0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub n0: usize,
    pub a: Vec<f64>,
    pub a_perp: Vec<f64>,
}

impl ModelParams {
    pub fn new(n: usize, n0: usize, a: Vec<f64>, a_perp: Vec<f64>) -> Result<Self> {
        let p = Self { n, n0, a, a_perp };
        p.validate()?;
        Ok(p)
    }

    /// All eigenvalues equal to `2 pi`.
    pub fn kahler_standard(n: usize, n0: usize) -> Result<Self> {
        if n0 > n {
            return Err(Error::InvalidParams(format!("n0 = {n0} exceeds n = {n}")));
        }
        Self::new(n, n0, vec![2.0 * PI; n - n0], vec![2.0 * PI; n0])
    }

    pub fn validate(&self) -> Result<()> {
        if self.n0 > self.n {
            return Err(Error::InvalidParams(format!("n0 = {} exceeds n = {}", self.n0, self.n)));
        }
        if self.a.len() != self.n - self.n0 || self.a_perp.len() != self.n0 {
            return Err(Error::InvalidParams(format!(
                "expected {} horizontal and {} normal eigenvalues, got {} and {}",
                self.n - self.n0,
                self.n0,
                self.a.len(),
                self.a_perp.len()
            )));
        }
        if self.a.iter().chain(&self.a_perp).any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidParams("eigenvalues must be positive and finite".into()));
        }
        Ok(())
    }

    /// True when every eigenvalue equals `2 pi`.
    pub fn is_kahler_standard(&self) -> bool {
        self.a.iter().chain(&self.a_perp).all(|x| (x - 2.0 * PI).abs() <= 1e-15 * 2.0 * PI)
    }

    /// Number of horizontal complex directions `n - n0`.
    pub fn nh(&self) -> usize {
        self.n - self.n0
    }

    /// Real dimension of a model point, `2(n - n0) + n0`.
    pub fn point_dim(&self) -> usize {
        2 * self.nh() + self.n0
    }

    /// Eigenvalue `2<alpha, a> + 2<gamma, a_perp>` of `b^alpha b_perp^gamma P`.
    pub fn eigenvalue(&self, alpha: &[u8], gamma: &[u8]) -> f64 {
        2.0 * alpha.iter().zip(&self.a).map(|(k, a)| *k as f64 * a).sum::<f64>()
            + 2.0 * gamma.iter().zip(&self.a_perp).map(|(k, a)| *k as f64 * a).sum::<f64>()
    }
}
