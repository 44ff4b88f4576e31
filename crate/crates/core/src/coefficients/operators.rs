use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::geometry::{get1, get2, get3, get4, PointGeometry};
use crate::model::{model_operator, LadderPolynomial, Letter, ModelParams};
use crate::{Error, Result};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Word sum accumulated into one canonical polynomial.
struct Builder<'a> {
    params: &'a ModelParams,
    acc: LadderPolynomial,
}

impl<'a> Builder<'a> {
    fn new(params: &'a ModelParams) -> Self {
        Self { params, acc: LadderPolynomial::zero(params) }
    }

    fn word(&mut self, letters: &[Letter], coeff: C64) -> Result<()> {
        if coeff.norm() == 0.0 {
            return Ok(());
        }
        let w = LadderPolynomial::word(self.params, letters, c(1.0))?;
        self.acc.accumulate(&w, coeff);
        Ok(())
    }

    fn poly(&mut self, p: &LadderPolynomial, coeff: C64) {
        self.acc.accumulate(p, coeff);
    }

    fn done(self) -> LadderPolynomial {
        self.acc.finish()
    }
}

/// `(4 pi)^2 Z_j Z_k` in ladder form.
fn b2(j: usize, k: usize) -> Vec<(Vec<Letter>, f64)> {
    use Letter::{BPerp as B, BPerpPlus as Bp};
    let mut v = vec![
        (vec![Bp(j), Bp(k)], 1.0),
        (vec![B(k), Bp(j)], 1.0),
        (vec![B(j), Bp(k)], 1.0),
        (vec![B(j), B(k)], 1.0),
    ];
    if j == k {
        v.push((vec![], 4.0 * PI));
    }
    v
}

/// Symmetrized cubic `B_ijk` in ladder form.
fn b3(i: usize, j: usize, k: usize) -> Vec<(Vec<Letter>, f64)> {
    use Letter::{BPerp as B, BPerpPlus as Bp};
    vec![
        (vec![B(i), B(j), B(k)], 1.0),
        (vec![B(i), B(j), Bp(k)], 3.0),
        (vec![B(i), Bp(j), Bp(k)], 3.0),
        (vec![Bp(i), Bp(j), Bp(k)], 1.0),
    ]
}

fn require_standard(p: &ModelParams) -> Result<()> {
    if !p.is_kahler_standard() {
        return Err(Error::Unsupported("operator builders need the Kahler-standard model (all eigenvalues 2 pi)".into()));
    }
    Ok(())
}

/// First-order perturbation operator in ladder form, all seven term groups.
pub fn build_o1(geom: &PointGeometry) -> Result<LadderPolynomial> {
    geom.validate()?;
    let p = &geom.params;
    require_standard(p)?;
    let (nh, n0) = (p.nh(), p.n0);
    let mut b = Builder::new(p);
    use Letter::{BPerp, BPerpPlus, BPlus, Z, Zbar, B};

    for i in 0..nh {
        for j in 0..n0 {
            for k in 0..n0 {
                let tzb = get3(&geom.tmix.dzb, i, j, k);
                if tzb.norm() == 0.0 {
                    continue;
                }
                let tz = tzb.conj();
                for (w, s) in b2(j, k) {
                    let mut left = w.clone();
                    left.push(BPlus(i));
                    b.word(&left, -I / (8.0 * PI) * tz * s)?;
                    let mut right = vec![B(i)];
                    right.extend(w);
                    b.word(&right, I / (8.0 * PI) * tzb * s)?;
                }
            }
        }
    }
    for l in 0..nh {
        for i in 0..n0 {
            for j in 0..n0 {
                let tzb = get3(&geom.tmix.dzb, l, i, j);
                for (m, coef) in [(Z(l), tzb.conj()), (Zbar(l), tzb)] {
                    b.word(&[m, BPerpPlus(i), BPerpPlus(j)], I / 4.0 * coef)?;
                    b.word(&[m, BPerp(i), BPerp(j)], -I / 4.0 * coef)?;
                }
            }
        }
    }
    for i in 0..n0 {
        for j in 0..n0 {
            for k in 0..n0 {
                let t = get3(&geom.ttilde, i, j, k);
                b.word(&[BPerp(j), BPerpPlus(k), BPerpPlus(i)], -I / (8.0 * PI) * t)?;
                b.word(&[BPerp(j), BPerp(k), BPerpPlus(i)], -I / (8.0 * PI) * t)?;
            }
        }
    }
    for i in 0..nh {
        for j in 0..nh {
            for k in 0..n0 {
                let t = get3(&geom.tmix.t_h, i, j, k);
                for n in [BPerpPlus(k), BPerp(k)] {
                    b.word(&[n, B(j), BPlus(i)], -I / (4.0 * PI) * t * 2.0)?;
                    if i == j {
                        b.word(&[n], -I / (4.0 * PI) * t * 4.0 * PI)?;
                    }
                }
            }
        }
    }
    for j in 0..n0 {
        let mu = get1(&geom.mu_e.values, j);
        b.word(&[BPerpPlus(j)], I * mu)?;
        b.word(&[BPerp(j)], I * mu)?;
    }
    for i in 0..n0 {
        for j in 0..n0 {
            for k in 0..n0 {
                let t = get3(&geom.t3, i, j, k);
                if t == 0.0 {
                    continue;
                }
                for (w, s) in b3(i, j, k) {
                    b.word(&w, c(t * s / (16.0 * PI)))?;
                }
                if i == k {
                    b.word(&[BPerpPlus(j)], c(t * 12.0 * PI / (16.0 * PI)))?;
                    b.word(&[BPerp(j)], c(t * 12.0 * PI / (16.0 * PI)))?;
                }
            }
        }
    }
    Ok(b.done())
}

/// Second-order perturbation operator for a reduction to a point (`n = n0`).
pub fn build_o2_fully_normal(geom: &PointGeometry) -> Result<LadderPolynomial> {
    geom.validate()?;
    let p = &geom.params;
    if p.nh() != 0 {
        return Err(Error::Unsupported("the second-order builder covers n = n0 only; pass the operator explicitly".into()));
    }
    require_standard(p)?;
    let n0 = p.n0;
    let z = |j: usize| LadderPolynomial::letter(p, Letter::Zperp(j));
    let zz = |a: usize, b: usize, s: C64| LadderPolynomial::word(p, &[Letter::Zperp(a), Letter::Zperp(b)], s);
    // d/dZ_j = (bperp+_j - bperp_j) / 2
    let d = |j: usize| -> Result<LadderPolynomial> {
        let plus = LadderPolynomial::letter(p, Letter::BPerpPlus(j))?;
        let minus = LadderPolynomial::letter(p, Letter::BPerp(j))?;
        Ok(plus.sub(&minus)?.scale(c(0.5)))
    };
    let t3 = |a, b, k| get3(&geom.t3, a, b, k);
    let tt = |a, b, k| get3(&geom.ttilde, a, b, k);
    let r = |a, b, cc, dd| get4(&geom.rtb, a, b, cc, dd);
    let mut out = Builder::new(p);

    // symmetrized drift from the torsion coupling
    for l in 0..n0 {
        let mut bl = Builder::new(p);
        for a in 0..n0 {
            for bb in 0..n0 {
                for i in 0..n0 {
                    let s: f64 = (0..n0).map(|k| t3(a, bb, k) * tt(i, l, k)).sum();
                    if s != 0.0 {
                        bl.word(&[Letter::Zperp(a), Letter::Zperp(bb), Letter::Zperp(i)], -I * PI / 2.0 * s)?;
                    }
                }
            }
        }
        let bl = bl.done();
        if bl.is_zero() {
            continue;
        }
        let dl = d(l)?;
        out.poly(&bl.mul(&dl)?, c(-0.5));
        out.poly(&dl.mul(&bl)?, c(-0.5));
    }

    // curvature of the base
    let lop = model_operator(p)?;
    let mut k2 = Builder::new(p);
    for a in 0..n0 {
        for bb in 0..n0 {
            let mut second = Builder::new(p);
            for i in 0..n0 {
                for j in 0..n0 {
                    let v = r(a, i, bb, j);
                    if v != 0.0 {
                        second.poly(&d(i)?.mul(&d(j)?)?, c(v / 3.0));
                    }
                }
            }
            let second = second.done();
            if !second.is_zero() {
                out.poly(&zz(a, bb, c(1.0))?.mul(&second)?, c(1.0));
            }
            let kv: f64 = (0..n0).map(|i| r(a, i, bb, i)).sum();
            k2.word(&[Letter::Zperp(a), Letter::Zperp(bb)], c(kv / 3.0))?;
        }
    }
    let k2 = k2.done();
    if !k2.is_zero() {
        out.poly(&k2.commutator(&lop)?, c(0.25));
    }
    for a in 0..n0 {
        for j in 0..n0 {
            let v: f64 = (0..n0).map(|i| r(a, i, i, j)).sum();
            if v != 0.0 {
                out.poly(&z(a)?.mul(&d(j)?)?, c(2.0 / 3.0 * v));
            }
            let e = get2(&geom.reb.normal, a, j);
            if e.norm() != 0.0 {
                out.poly(&z(a)?.mul(&d(j)?)?, -e);
            }
        }
    }

    // squares of torsion contractions
    let quad = |coeffs: &dyn Fn(usize, usize) -> f64| -> Result<LadderPolynomial> {
        let mut q = Builder::new(p);
        for a in 0..n0 {
            for bb in 0..n0 {
                q.word(&[Letter::Zperp(a), Letter::Zperp(bb)], c(coeffs(a, bb)))?;
            }
        }
        Ok(q.done())
    };
    for i in 0..n0 {
        let q = quad(&|a, bb| tt(a, i, bb))?;
        if !q.is_zero() {
            let sq = q.mul(&q)?;
            out.poly(&sq, c(PI * PI));
            out.poly(&sq, c(-4.0 * PI * PI / 12.0));
        }
        let q = quad(&|a, bb| t3(a, bb, i))?;
        if !q.is_zero() {
            out.poly(&q.mul(&q)?, c(4.0 * PI * PI * 7.0 / 12.0));
        }
    }
    for j in 0..n0 {
        for k in 0..n0 {
            for l in 0..n0 {
                for m in 0..n0 {
                    let g = get4(&geom.gdot, j, k, l, m);
                    if g != 0.0 {
                        out.word(
                            &[Letter::Zperp(j), Letter::Zperp(k), Letter::Zperp(l), Letter::Zperp(m)],
                            c(-4.0 * PI * PI * g / 3.0),
                        )?;
                    }
                }
            }
        }
    }

    // twisting moment
    for a in 0..n0 {
        for bb in 0..n0 {
            let tm: C64 = (0..n0).map(|k| t3(a, bb, k) * get1(&geom.mu_e.values, k)).sum();
            let coef = -4.0 * PI * I * (-0.5 * tm - get2(&geom.mu_e.grad, a, bb));
            out.word(&[Letter::Zperp(a), Letter::Zperp(bb)], coef)?;
        }
    }
    let mu2: C64 = geom.mu_e.values.iter().map(|m| m * m).sum();
    let logh: f64 = (0..n0).map(|k| get2(&geom.d2logh.normal, k, k) + get1(&geom.dlogh.normal, k).powi(2)).sum();
    out.word(&[], c(logh) - mu2)?;
    Ok(out.done())
}
