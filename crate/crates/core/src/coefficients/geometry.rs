use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::ModelParams;
use crate::{Error, Result};

pub type Tensor3<T> = Vec<Vec<Vec<T>>>;
pub type Tensor4<T> = Vec<Vec<Vec<Vec<T>>>>;

/// Torsion components that mix horizontal and normal directions.
///
/// `dzb[i][j][k]` is `<J T(d/dzbar_i, e_j), e_k>` (the conjugate gives the `d/dz_i`
/// version); `tH[i][j][k]` is `<J T(d/dz_i, d/dzbar_j), e_k>`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TorsionMix {
    #[serde(default)]
    pub dzb: Tensor3<C64>,
    #[serde(default, rename = "tH")]
    pub t_h: Tensor3<C64>,
}

/// Moment-twist values `<J e_k, mu>` and normal derivatives `<J e_k, nabla_{e_l} mu>`.
///
/// Values are complex; the admissible (formally self-adjoint) case is purely imaginary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MuE {
    #[serde(default)]
    pub values: Vec<C64>,
    #[serde(default)]
    pub grad: Vec<Vec<C64>>,
}

/// First derivatives of `log h`: along the normal unit vectors and along the real
/// horizontal coordinates `(x_1, y_1, ..., x_m, y_m)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DLogH {
    #[serde(default)]
    pub normal: Vec<f64>,
    #[serde(default)]
    pub horizontal: Vec<f64>,
}

/// Normal Hessian of `log h` and the horizontal Laplacian of `log h~`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct D2LogH {
    #[serde(default)]
    pub normal: Vec<Vec<f64>>,
    #[serde(default)]
    pub horizontal_laplacian: Option<f64>,
}

/// Twisting curvature: `normal[k][l] = R^{E_B}(e_k, e_l)` and
/// `horizontal_trace = sum_j R^{E_G}(w_j, wbar_j)` for an orthonormal `w`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurvatureE {
    #[serde(default)]
    pub normal: Vec<Vec<C64>>,
    #[serde(default)]
    pub horizontal_trace: Option<f64>,
}

/// Pointwise geometric contractions at a reduction point.
///
/// Empty tensors stand for absent data: the operator builders read them as zero, the
/// closed forms report them as missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointGeometry {
    pub params: ModelParams,
    #[serde(default, rename = "T3")]
    pub t3: Tensor3<f64>,
    #[serde(default, rename = "Ttilde")]
    pub ttilde: Tensor3<f64>,
    #[serde(default, rename = "Tmix")]
    pub tmix: TorsionMix,
    #[serde(default, rename = "muE")]
    pub mu_e: MuE,
    #[serde(default)]
    pub dlogh: DLogH,
    #[serde(default)]
    pub d2logh: D2LogH,
    #[serde(default, rename = "RTB")]
    pub rtb: Tensor4<f64>,
    #[serde(default, rename = "REB")]
    pub reb: CurvatureE,
    #[serde(default, rename = "Gdot")]
    pub gdot: Tensor4<f64>,
    #[serde(default, rename = "rXG")]
    pub r_xg: Option<f64>,
}

pub(crate) fn get3<T: Copy + Default>(t: &Tensor3<T>, i: usize, j: usize, k: usize) -> T {
    t.get(i).and_then(|a| a.get(j)).and_then(|b| b.get(k)).copied().unwrap_or_default()
}

pub(crate) fn get4<T: Copy + Default>(t: &Tensor4<T>, i: usize, j: usize, k: usize, l: usize) -> T {
    t.get(i).and_then(|a| a.get(j)).and_then(|b| b.get(k)).and_then(|c| c.get(l)).copied().unwrap_or_default()
}

pub(crate) fn get2<T: Copy + Default>(t: &[Vec<T>], i: usize, j: usize) -> T {
    t.get(i).and_then(|a| a.get(j)).copied().unwrap_or_default()
}

pub(crate) fn get1<T: Copy + Default>(t: &[T], i: usize) -> T {
    t.get(i).copied().unwrap_or_default()
}

fn zeros3<T: Clone + Default>(a: usize, b: usize, c: usize) -> Tensor3<T> {
    vec![vec![vec![T::default(); c]; b]; a]
}

fn zeros4<T: Clone + Default>(n: usize) -> Tensor4<T> {
    vec![vec![vec![vec![T::default(); n]; n]; n]; n]
}

fn shape_ok<T>(v: &[T], n: usize) -> bool {
    v.is_empty() || v.len() == n
}

trait Finite {
    fn finite(&self) -> bool;
    fn mag(&self) -> f64;
}

impl Finite for f64 {
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn mag(&self) -> f64 {
        self.abs()
    }
}

impl Finite for C64 {
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn mag(&self) -> f64 {
        self.norm()
    }
}

fn check_shape2<T>(name: &str, t: &[Vec<T>], a: usize, b: usize) -> Result<()> {
    if t.is_empty() {
        return Ok(());
    }
    if t.len() != a || t.iter().any(|r| r.len() != b) {
        return Err(Error::InvalidArgument(format!("{name}: expected shape {a}x{b}")));
    }
    Ok(())
}

fn check_shape3<T>(name: &str, t: &Tensor3<T>, a: usize, b: usize, c: usize) -> Result<()> {
    if t.is_empty() {
        return Ok(());
    }
    if t.len() != a || t.iter().any(|r| r.len() != b || r.iter().any(|s| s.len() != c)) {
        return Err(Error::InvalidArgument(format!("{name}: expected shape {a}x{b}x{c}")));
    }
    Ok(())
}

fn check_shape4<T>(name: &str, t: &Tensor4<T>, n: usize) -> Result<()> {
    if t.is_empty() {
        return Ok(());
    }
    if t.len() != n || t.iter().any(|r| r.len() != n || r.iter().any(|s| s.len() != n || s.iter().any(|u| u.len() != n))) {
        return Err(Error::InvalidArgument(format!("{name}: expected shape {n}^4")));
    }
    Ok(())
}

fn sym_tol(scale: f64) -> f64 {
    1e-12 * (1.0 + scale)
}

impl PointGeometry {
    /// Geometry with every field present and zero.
    pub fn zeros(params: &ModelParams) -> Self {
        let (nh, n0) = (params.nh(), params.n0);
        Self {
            params: params.clone(),
            t3: zeros3(n0, n0, n0),
            ttilde: zeros3(n0, n0, n0),
            tmix: TorsionMix { dzb: zeros3(nh, n0, n0), t_h: zeros3(nh, nh, n0) },
            mu_e: MuE { values: vec![C64::default(); n0], grad: vec![vec![C64::default(); n0]; n0] },
            dlogh: DLogH { normal: vec![0.0; n0], horizontal: vec![0.0; 2 * nh] },
            d2logh: D2LogH { normal: vec![vec![0.0; n0]; n0], horizontal_laplacian: Some(0.0) },
            rtb: zeros4(n0),
            reb: CurvatureE { normal: vec![vec![C64::default(); n0]; n0], horizontal_trace: Some(0.0) },
            gdot: zeros4(n0),
            r_xg: Some(0.0),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Shapes, finiteness and declared symmetries.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let (nh, n0) = (self.params.nh(), self.params.n0);
        check_shape3("T3", &self.t3, n0, n0, n0)?;
        check_shape3("Ttilde", &self.ttilde, n0, n0, n0)?;
        check_shape3("Tmix.dzb", &self.tmix.dzb, nh, n0, n0)?;
        check_shape3("Tmix.tH", &self.tmix.t_h, nh, nh, n0)?;
        if !shape_ok(&self.mu_e.values, n0) {
            return Err(Error::InvalidArgument(format!("muE.values: expected length {n0}")));
        }
        check_shape2("muE.grad", &self.mu_e.grad, n0, n0)?;
        if !shape_ok(&self.dlogh.normal, n0) || !shape_ok(&self.dlogh.horizontal, 2 * nh) {
            return Err(Error::InvalidArgument("dlogh: wrong length".into()));
        }
        check_shape2("d2logh.normal", &self.d2logh.normal, n0, n0)?;
        check_shape4("RTB", &self.rtb, n0)?;
        check_shape2("REB.normal", &self.reb.normal, n0, n0)?;
        check_shape4("Gdot", &self.gdot, n0)?;

        let reals = self
            .t3
            .iter()
            .chain(&self.ttilde)
            .flatten()
            .flatten()
            .chain(self.dlogh.normal.iter())
            .chain(self.dlogh.horizontal.iter())
            .chain(self.d2logh.normal.iter().flatten())
            .chain(self.rtb.iter().flatten().flatten().flatten())
            .chain(self.gdot.iter().flatten().flatten().flatten())
            .chain(self.d2logh.horizontal_laplacian.iter())
            .chain(self.reb.horizontal_trace.iter())
            .chain(self.r_xg.iter());
        let complexes = self
            .tmix
            .dzb
            .iter()
            .chain(&self.tmix.t_h)
            .flatten()
            .flatten()
            .chain(self.mu_e.values.iter())
            .chain(self.mu_e.grad.iter().flatten())
            .chain(self.reb.normal.iter().flatten());
        if !reals.clone().all(|x| x.finite()) || !complexes.clone().all(|x| x.finite()) {
            return Err(Error::InvalidArgument("geometry entries must be finite".into()));
        }
        let scale = reals.map(|x| x.mag()).chain(complexes.map(|x| x.mag())).fold(0.0, f64::max);
        let tol = sym_tol(scale);
        let bad = |what: &str| Err(Error::SymmetryViolation(what.to_string()));

        for i in 0..n0 {
            for j in 0..n0 {
                for k in 0..n0 {
                    let t = get3(&self.t3, i, j, k);
                    if (t - get3(&self.t3, j, i, k)).abs() > tol || (t - get3(&self.t3, i, k, j)).abs() > tol {
                        return bad("T3 must be fully symmetric");
                    }
                    if (get3(&self.ttilde, i, j, k) + get3(&self.ttilde, j, i, k)).abs() > tol {
                        return bad("Ttilde must be antisymmetric in its first two indices");
                    }
                }
                if (get2(&self.d2logh.normal, i, j) - get2(&self.d2logh.normal, j, i)).abs() > tol {
                    return bad("d2logh.normal must be symmetric");
                }
                if (get2(&self.reb.normal, i, j) + get2(&self.reb.normal, j, i)).norm() > tol {
                    return bad("REB.normal must be antisymmetric");
                }
                for k in 0..n0 {
                    for l in 0..n0 {
                        if (get4(&self.gdot, i, j, k, l) - get4(&self.gdot, i, j, l, k)).abs() > tol {
                            return bad("Gdot must be symmetric in its last two indices");
                        }
                        let r = get4(&self.rtb, i, j, k, l);
                        let checks = [
                            r + get4(&self.rtb, j, i, k, l),
                            r + get4(&self.rtb, i, j, l, k),
                            r - get4(&self.rtb, k, l, i, j),
                            r + get4(&self.rtb, j, k, i, l) + get4(&self.rtb, k, i, j, l),
                        ];
                        if checks.iter().any(|x| x.abs() > tol) {
                            return bad("RTB must satisfy the algebraic curvature identities");
                        }
                    }
                }
            }
        }
        for i in 0..nh {
            for j in 0..n0 {
                for k in 0..n0 {
                    if (get3(&self.tmix.dzb, i, j, k) - get3(&self.tmix.dzb, i, k, j)).norm() > tol {
                        return bad("Tmix.dzb must be symmetric in its normal indices");
                    }
                }
            }
            for j in 0..nh {
                for k in 0..n0 {
                    if (get3(&self.tmix.t_h, j, i, k) + get3(&self.tmix.t_h, i, j, k).conj()).norm() > tol {
                        return bad("Tmix.tH must satisfy tH[j][i][k] = -conj(tH[i][j][k])");
                    }
                }
            }
        }
        Ok(())
    }

    /// Geometric consistency relations that realizable data satisfy. Returned (and
    /// logged) as warnings only.
    pub fn consistency_warnings(&self) -> Vec<String> {
        let n0 = self.params.n0;
        let mut out = Vec::new();
        let tol = 1e-8;
        for m in 0..n0 {
            let lhs: f64 = (0..n0).map(|l| get3(&self.t3, l, l, m)).sum();
            let rhs = 2.0 * get1(&self.dlogh.normal, m);
            if (lhs - rhs).abs() > tol * (1.0 + rhs.abs()) {
                out.push(format!("sum_l T3[l][l][{m}] = {lhs} differs from 2 dlogh[{m}] = {rhs}"));
            }
        }
        let lhs: f64 = (0..n0).flat_map(|k| (0..n0).map(move |l| (k, l))).map(|(k, l)| get4(&self.gdot, k, k, l, l)).sum();
        let rhs: f64 = 4.0 * (0..n0).map(|k| get2(&self.d2logh.normal, k, k)).sum::<f64>();
        if (lhs - rhs).abs() > tol * (1.0 + rhs.abs()) {
            out.push(format!("trace of Gdot = {lhs} differs from 4 tr d2logh = {rhs}"));
        }
        for w in &out {
            log::warn!("{w}");
        }
        out
    }

    /// Overwrites the normal gradient of `log h` and shifts `Gdot` by an isotropic tensor so
    /// that the normal-direction geometric identities hold exactly:
    /// `T3_llm = 2 dlogh_m`, `Gdot_kkll = 4 tr d2logh` and
    /// `Gdot_kllk = 4 tr d2logh + (1/2) (Tt_jki + Tt_ijk) Tt_ijk`.
    /// Horizontal contributions to the second identity are not included.
    pub fn enforce_normal_relations(&mut self) {
        let n0 = self.params.n0;
        if n0 == 0 {
            return;
        }
        for m in 0..n0 {
            self.dlogh.normal[m] = 0.5 * (0..n0).map(|l| self.t3[l][l][m]).sum::<f64>();
        }
        let tr: f64 = (0..n0).map(|k| self.d2logh.normal[k][k]).sum();
        let mut x = 0.0;
        for i in 0..n0 {
            for j in 0..n0 {
                for k in 0..n0 {
                    x += (self.ttilde[j][k][i] + self.ttilde[i][j][k]) * self.ttilde[i][j][k];
                }
            }
        }
        let (mut g1, mut g2) = (0.0, 0.0);
        for k in 0..n0 {
            for l in 0..n0 {
                g1 += self.gdot[k][k][l][l];
                g2 += self.gdot[k][l][l][k];
            }
        }
        let (d1, d2) = (4.0 * tr - g1, 4.0 * tr + 0.5 * x - g2);
        let n = n0 as f64;
        // isotropic shift c1 d_jk d_lm + c2 (d_jl d_km + d_jm d_kl)
        let (c1, c2) = if n0 == 1 {
            (d1, 0.0)
        } else {
            let det = n * n * (n * n + n) - 2.0 * n * n;
            ((d1 * (n * n + n) - 2.0 * n * d2) / det, (n * n * d2 - n * d1) / det)
        };
        let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for j in 0..n0 {
            for k in 0..n0 {
                for l in 0..n0 {
                    for m in 0..n0 {
                        self.gdot[j][k][l][m] += c1 * dl(j, k) * dl(l, m) + c2 * (dl(j, l) * dl(k, m) + dl(j, m) * dl(k, l));
                    }
                }
            }
        }
    }

    /// Random data that also satisfies the normal-direction identities, with `Ttilde`
    /// trace-free in its first and last slots (as for Ad-invariant fibre metrics).
    pub fn random_consistent<R: Rng>(params: &ModelParams, rng: &mut R, scale: f64) -> Self {
        let mut g = Self::random_admissible(params, rng, scale);
        let n0 = params.n0;
        if n0 > 1 {
            let v: Vec<f64> = (0..n0).map(|j| (0..n0).map(|i| g.ttilde[i][j][i]).sum()).collect();
            let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            for i in 0..n0 {
                for j in 0..n0 {
                    for k in 0..n0 {
                        g.ttilde[i][j][k] -= (d(i, k) * v[j] - d(j, k) * v[i]) / (n0 as f64 - 1.0);
                    }
                }
            }
        }
        g.enforce_normal_relations();
        g
    }

    /// Random data respecting every declared symmetry, with imaginary twist terms so the
    /// built operators are formally self-adjoint.
    pub fn random_admissible<R: Rng>(params: &ModelParams, rng: &mut R, scale: f64) -> Self {
        let (nh, n0) = (params.nh(), params.n0);
        let u = |rng: &mut R| scale * (2.0 * rng.gen::<f64>() - 1.0);
        let mut g = Self::zeros(params);
        for i in 0..n0 {
            for j in i..n0 {
                for k in j..n0 {
                    let v = u(rng);
                    for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        g.t3[a][b][c] = v;
                    }
                }
            }
        }
        for i in 0..n0 {
            for j in (i + 1)..n0 {
                for k in 0..n0 {
                    let v = u(rng);
                    g.ttilde[i][j][k] = v;
                    g.ttilde[j][i][k] = -v;
                }
            }
        }
        for i in 0..nh {
            for j in 0..n0 {
                for k in j..n0 {
                    let v = C64::new(u(rng), u(rng));
                    g.tmix.dzb[i][j][k] = v;
                    g.tmix.dzb[i][k][j] = v;
                }
            }
            for j in i..nh {
                for k in 0..n0 {
                    if i == j {
                        g.tmix.t_h[i][i][k] = C64::new(0.0, u(rng));
                    } else {
                        let v = C64::new(u(rng), u(rng));
                        g.tmix.t_h[i][j][k] = v;
                        g.tmix.t_h[j][i][k] = -v.conj();
                    }
                }
            }
        }
        for k in 0..n0 {
            g.mu_e.values[k] = C64::new(0.0, u(rng));
            for l in 0..n0 {
                g.mu_e.grad[k][l] = C64::new(0.0, u(rng));
            }
            g.dlogh.normal[k] = u(rng);
        }
        for x in g.dlogh.horizontal.iter_mut() {
            *x = u(rng);
        }
        for k in 0..n0 {
            for l in k..n0 {
                let v = u(rng);
                g.d2logh.normal[k][l] = v;
                g.d2logh.normal[l][k] = v;
                if l > k {
                    let w = C64::new(0.0, u(rng));
                    g.reb.normal[k][l] = w;
                    g.reb.normal[l][k] = -w;
                }
            }
        }
        // Kulkarni-Nomizu product of two symmetric forms has every curvature symmetry
        let mut h = vec![vec![0.0; n0]; n0];
        let mut q = vec![vec![0.0; n0]; n0];
        for a in 0..n0 {
            for b in a..n0 {
                h[a][b] = u(rng);
                h[b][a] = h[a][b];
                q[a][b] = u(rng);
                q[b][a] = q[a][b];
            }
        }
        for a in 0..n0 {
            for b in 0..n0 {
                for c in 0..n0 {
                    for d in 0..n0 {
                        g.rtb[a][b][c][d] = h[a][c] * q[b][d] + h[b][d] * q[a][c] - h[a][d] * q[b][c] - h[b][c] * q[a][d];
                    }
                }
            }
        }
        for a in 0..n0 {
            for b in 0..n0 {
                for c in 0..n0 {
                    for d in c..n0 {
                        let v = u(rng);
                        g.gdot[a][b][c][d] = v;
                        g.gdot[a][b][d][c] = v;
                    }
                }
            }
        }
        // the quotient is a point when n = n0
        if nh > 0 {
            g.d2logh.horizontal_laplacian = Some(u(rng));
            g.reb.horizontal_trace = Some(u(rng));
            g.r_xg = Some(u(rng));
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn consistent_geometries_satisfy_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n0 in 1..=3 {
            let p = ModelParams::kahler_standard(n0, n0).unwrap();
            let g = PointGeometry::random_consistent(&p, &mut rng, 1.0);
            g.validate().unwrap();
            assert!(g.consistency_warnings().is_empty());
            for j in 0..n0 {
                let v: f64 = (0..n0).map(|i| g.ttilde[i][j][i]).sum();
                assert!(v.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn random_geometries_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, n0) in [(1, 1), (2, 2), (2, 1), (3, 2)] {
            let p = ModelParams::kahler_standard(n, n0).unwrap();
            let g = PointGeometry::random_admissible(&p, &mut rng, 1.0);
            g.validate().unwrap();
        }
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ModelParams::kahler_standard(3, 2).unwrap();
        let g = PointGeometry::random_admissible(&p, &mut rng, 1.0);
        let back = PointGeometry::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn symmetry_violation_rejected() {
        let p = ModelParams::kahler_standard(2, 2).unwrap();
        let mut g = PointGeometry::zeros(&p);
        g.t3[0][0][1] = 1.0;
        assert!(matches!(g.validate(), Err(Error::SymmetryViolation(_))));
        let mut g = PointGeometry::zeros(&p);
        g.ttilde[0][1][0] = 1.0;
        assert!(matches!(g.validate(), Err(Error::SymmetryViolation(_))));
        let mut g = PointGeometry::zeros(&p);
        g.t3 = vec![vec![vec![0.0]]];
        assert!(g.validate().is_err());
    }

    #[test]
    fn sparse_json_defaults_to_empty() {
        let g = PointGeometry::from_json(r#"{"params":{"n":1,"n0":1,"a":[],"a_perp":[6.283185307179586]},"muE":{"values":[[0.0,0.5]]}}"#)
            .unwrap();
        assert!(g.t3.is_empty());
        assert_eq!(g.mu_e.values[0], C64::new(0.0, 0.5));
    }

    #[test]
    fn consistency_warning_fires() {
        let p = ModelParams::kahler_standard(1, 1).unwrap();
        let mut g = PointGeometry::zeros(&p);
        assert!(g.consistency_warnings().is_empty());
        g.dlogh.normal[0] = 1.0;
        assert_eq!(g.consistency_warnings().len(), 1);
    }
}
