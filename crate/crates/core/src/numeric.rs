//! Small numeric helpers shared by the modules: quadrature rules, log-factorials and
//! compensated summation.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;

/// Gauss-Legendre nodes and weights mapped to `[a, b]`, in ascending node order.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order.max(2)).expect("order is positive");
    let rule = GaussLegendre::new(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut out: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    out.sort_by(|l, r| l.0.total_cmp(&r.0));
    out
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    statrs::function::factorial::ln_factorial(n)
}

/// `n!` as a float (exact up to 22!).
pub fn factorial(n: u64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binomial coefficient as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(2k-1)!!` with the convention `(-1)!! = 1`.
pub fn odd_double_factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (2 * i - 1) as f64)
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated sum of a real sequence.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Compensated sum of a complex sequence (real and imaginary parts separately).
pub fn compensated_sum_c<I: IntoIterator<Item = C64>>(xs: I) -> C64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for x in xs {
        re.add(x.re);
        im.add(x.im);
    }
    C64::new(re.value(), im.value())
}

/// `sum_k c_k exp(l_k)` evaluated with a max shift, returned as `(log scale, mantissa)`
/// so that the value is `mantissa * exp(log scale)`.
pub fn shifted_exp_sum(terms: &[(f64, C64)]) -> (f64, C64) {
    let shift = terms
        .iter()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return (0.0, C64::new(0.0, 0.0));
    }
    let m = compensated_sum_c(terms.iter().map(|(l, c)| c * (l - shift).exp()));
    (shift, m)
}


/// A float with a separate binary exponent, `m * 2^e`, for products that leave the `f64`
/// range (factorials, high powers) without the rounding of a log-domain representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    m: f64,
    e: i64,
}

fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    if exp == 0 {
        // subnormal: rescale into the normal range first
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, exp - 1022)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

impl Scaled {
    pub const ONE: Scaled = Scaled { m: 0.5, e: 1 };
    pub const ZERO: Scaled = Scaled { m: 0.0, e: 0 };

    pub fn new(x: f64) -> Self {
        Self::normalized(x, 0)
    }

    fn normalized(m: f64, e: i64) -> Self {
        let (m, de) = frexp(m);
        if m == 0.0 {
            return Self::ZERO;
        }
        Self { m, e: e + de }
    }

    pub fn is_zero(self) -> bool {
        self.m == 0.0
    }

    pub fn mul(self, o: Self) -> Self {
        Self::normalized(self.m * o.m, self.e + o.e)
    }

    pub fn div(self, o: Self) -> Self {
        Self::normalized(self.m / o.m, self.e - o.e)
    }

    /// Binary exponentiation.
    pub fn powi(self, mut n: u64) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.m, self.e)
    }

    pub fn ln(self) -> f64 {
        self.m.ln() + self.e as f64 * std::f64::consts::LN_2
    }

    /// Binary exponent, for aligning sums.
    pub fn exponent(self) -> i64 {
        self.e
    }

    /// `self * 2^{-shift}` as a plain float.
    pub fn mantissa_shifted(self, shift: i64) -> f64 {
        ldexp(self.m, self.e - shift)
    }
}

/// `n!` for `n = 0..=max` as scaled floats.
pub fn scaled_factorials(max: u64) -> Vec<Scaled> {
    let mut out = Vec::with_capacity(max as usize + 1);
    let mut f = Scaled::ONE;
    out.push(f);
    for i in 1..=max {
        f = f.mul(Scaled::new(i as f64));
        out.push(f);
    }
    out
}

/// `sum_k c_k x_k` for scaled magnitudes `x_k`, aligned to the largest exponent and summed
/// with compensation. Returns the value as a scaled magnitude times a complex mantissa.
pub fn scaled_sum(terms: &[(Scaled, C64)]) -> (i64, C64) {
    let top = terms.iter().filter(|t| !t.0.is_zero()).map(|t| t.0.exponent()).max();
    match top {
        None => (0, C64::new(0.0, 0.0)),
        Some(top) => (top, compensated_sum_c(terms.iter().map(|(x, c)| c * x.mantissa_shifted(top)))),
    }
}

/// `m * 2^e`.
pub fn ldexp_c(m: C64, e: i64) -> C64 {
    C64::new(ldexp(m.re, e), ldexp(m.im, e))
}
