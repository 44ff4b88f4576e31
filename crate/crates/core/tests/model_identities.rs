//! Evaluation identities of the model algebra and its structural properties.

use std::f64::consts::PI;

use bergman_lab::model::*;
use bergman_lab::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn crand(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn at_origin(k: &KernelPolynomial) -> C64 {
    let o = ModelPoint::origin(k.params());
    k.eval_at(&o, &o).unwrap()
}

fn op(p: &ModelParams, words: &[(Vec<Letter>, C64)]) -> LadderPolynomial {
    normal_order(p, words).unwrap()
}

fn on_p(o: &LadderPolynomial) -> KernelPolynomial {
    apply_to_kernel(o, &KernelPolynomial::identity(o.params())).unwrap()
}

fn resolve1(k: &KernelPolynomial) -> KernelPolynomial {
    project_and_resolve(k, SpectralMode::Resolve(1)).unwrap()
}

fn project(k: &KernelPolynomial) -> KernelPolynomial {
    project_and_resolve(k, SpectralMode::Project).unwrap()
}

/// Random homogeneous quadratic in `z, zbar` with its derivative tables.
struct Quadratic {
    words: Vec<(Vec<Letter>, C64)>,
    /// d^2F / dz_i dzbar_j
    mixed: Vec<Vec<C64>>,
    /// d^2F / dz_i dz_j
    holo: Vec<Vec<C64>>,
}

fn random_quadratic(nh: usize, rng: &mut ChaCha8Rng) -> Quadratic {
    let mut words = vec![];
    let mut mixed = vec![vec![c(0.0); nh]; nh];
    let mut holo = vec![vec![c(0.0); nh]; nh];
    for i in 0..nh {
        for j in 0..nh {
            let m = crand(rng);
            words.push((vec![Letter::Z(i), Letter::Zbar(j)], m));
            mixed[i][j] += m;
            if i <= j {
                let h = crand(rng);
                words.push((vec![Letter::Z(i), Letter::Z(j)], h));
                holo[i][j] += h;
                holo[j][i] += h;
                words.push((vec![Letter::Zbar(i), Letter::Zbar(j)], crand(rng)));
            }
        }
    }
    Quadratic { words, mixed, holo }
}

/// Random linear forms `h_i` in `z, zbar`, with `dh_i/dz_j`.
fn random_linear(nh: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<(Vec<Letter>, C64)>>, Vec<Vec<C64>>) {
    let mut forms = vec![];
    let mut dz = vec![vec![c(0.0); nh]; nh];
    for i in 0..nh {
        let mut w = vec![];
        for j in 0..nh {
            let a = crand(rng);
            w.push((vec![Letter::Z(j)], a));
            dz[i][j] = a;
            w.push((vec![Letter::Zbar(j)], crand(rng)));
        }
        forms.push(w);
    }
    (forms, dz)
}

fn prefix(l: &[Letter], words: &[(Vec<Letter>, C64)]) -> Vec<(Vec<Letter>, C64)> {
    words.iter().map(|(w, c)| (l.iter().copied().chain(w.iter().copied()).collect(), *c)).collect()
}

fn suffix(words: &[(Vec<Letter>, C64)], l: &[Letter]) -> Vec<(Vec<Letter>, C64)> {
    words.iter().map(|(w, c)| (w.iter().copied().chain(l.iter().copied()).collect(), *c)).collect()
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

#[test]
fn horizontal_evaluation_table() {
    let p = ModelParams::kahler_standard(2, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(364);
    for _ in 0..5 {
        let f = random_quadratic(2, &mut rng);
        let lap: C64 = (0..2).map(|i| f.mixed[i][i]).sum();
        let fp = on_p(&op(&p, &f.words));

        let perp = fp.sub(&project(&fp)).unwrap();
        assert!(close(at_origin(&perp), -lap / PI, 1e-12));
        assert!(close(at_origin(&resolve1(&fp)), -lap / (4.0 * PI * PI), 1e-12));

        let mut bb = vec![];
        for i in 0..2 {
            for j in 0..2 {
                bb.push((vec![Letter::B(i), Letter::B(j)], crand(&mut rng)));
            }
        }
        assert!(at_origin(&resolve1(&on_p(&op(&p, &bb)))).norm() < 1e-12);

        for i in 0..2 {
            for j in 0..2 {
                let bfb = prefix(&[Letter::B(i)], &suffix(&f.words, &[Letter::B(j)]));
                let bbf = prefix(&[Letter::B(i), Letter::B(j)], &f.words);
                let fbb = suffix(&f.words, &[Letter::B(i), Letter::B(j)]);
                let d = f.holo[i][j];
                assert!(close(at_origin(&resolve1(&on_p(&op(&p, &bfb)))), -d / (2.0 * PI), 1e-12));
                assert!(close(at_origin(&resolve1(&on_p(&op(&p, &bbf)))), d / (2.0 * PI), 1e-12));
                assert!(close(at_origin(&resolve1(&on_p(&op(&p, &fbb)))), -3.0 * d / (2.0 * PI), 1e-12));
            }
        }

        let (h, dh) = random_linear(2, &mut rng);
        let mut hb = vec![];
        let mut bh = vec![];
        for i in 0..2 {
            assert!(at_origin(&resolve1(&on_p(&op(&p, &h[i])))).norm() < 1e-12);
            hb.extend(suffix(&h[i], &[Letter::B(i)]));
            bh.extend(prefix(&[Letter::B(i)], &h[i]));
        }
        let div: C64 = (0..2).map(|i| dh[i][i]).sum();
        assert!(close(at_origin(&resolve1(&on_p(&op(&p, &hb)))), -div / (2.0 * PI), 1e-12));
        assert!(close(at_origin(&resolve1(&on_p(&op(&p, &bh)))), -div / (2.0 * PI), 1e-12));

        let x = op(&p, &bh);
        let sq = on_p(&x.mul(&x).unwrap());
        let cross: C64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| dh[i][j] * dh[j][i]).sum();
        assert!(close(at_origin(&resolve1(&sq)), -(cross - div * div) / (2.0 * PI), 1e-12));
    }
}

#[test]
fn holomorphic_times_antiholomorphic_projection() {
    let p = ModelParams::kahler_standard(2, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(358);
    let a: Vec<C64> = (0..2).map(|_| crand(&mut rng)).collect();
    let b: Vec<C64> = (0..2).map(|_| crand(&mut rng)).collect();
    let mut words = vec![];
    for i in 0..2 {
        for j in 0..2 {
            words.push((vec![Letter::Z(i), Letter::Zbar(j)], a[i] * b[j]));
        }
    }
    let v = at_origin(&project(&on_p(&op(&p, &words))));
    let expect: C64 = (0..2).map(|i| a[i] * b[i]).sum::<C64>() / PI;
    assert!(close(v, expect, 1e-12));
}

#[test]
fn normal_ladder_powers_at_origin() {
    let p = ModelParams::kahler_standard(1, 1).unwrap();
    let expect = [0.0, -4.0 * PI, 0.0, 3.0 * (4.0 * PI).powi(2), 0.0, 15.0 * (-4.0 * PI).powi(3), 0.0];
    for (k, e) in expect.iter().enumerate() {
        let w = vec![Letter::BPerp(0); k + 1];
        let v = at_origin(&on_p(&op(&p, &[(w, c(1.0))]))) / 2f64.sqrt();
        assert!(close(v, c(*e), 1e-12), "power {}: {v}", k + 1);
    }
}

#[test]
fn mixed_ladder_values_at_origin() {
    let p = ModelParams::kahler_standard(4, 2).unwrap();
    let p0 = at_origin(&KernelPolynomial::identity(&p));
    for i in 0..2 {
        for j in 0..2 {
            let d = if i == j { 1.0 } else { 0.0 };
            let v = at_origin(&on_p(&op(&p, &[(vec![Letter::B(j), Letter::Z(i)], c(1.0))])));
            assert!(close(v, c(-2.0 * d) * p0, 1e-12));
            for k in 0..2 {
                for l in 0..2 {
                    let dd = if k == l { d } else { 0.0 };
                    let w = vec![Letter::BPerp(k), Letter::BPerp(l), Letter::B(j), Letter::Z(i)];
                    let v = at_origin(&on_p(&op(&p, &[(w, c(1.0))])));
                    assert!(close(v, c(8.0 * PI * dd) * p0, 1e-12));
                }
            }
        }
    }
}

#[test]
fn multiplier_rewrites() {
    let p = ModelParams::kahler_standard(4, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(450);
    // z_i zbar_j P with the second argument at 0
    for i in 0..2 {
        for j in 0..2 {
            let lhs = on_p(&op(&p, &[(vec![Letter::Z(i), Letter::Zbar(j)], c(1.0))]));
            let d = if i == j { 2.0 } else { 0.0 };
            let rhs = on_p(&op(&p, &[(vec![Letter::B(j), Letter::Z(i)], c(1.0 / (2.0 * PI))), (vec![], c(d / (2.0 * PI)))]));
            for _ in 0..5 {
                let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let zero = vec![0.0; 6];
                assert!(close(lhs.eval(&x, &zero).unwrap(), rhs.eval(&x, &zero).unwrap(), 1e-12));
            }
        }
    }
    // normal quadratic and quartic
    for k in 0..2 {
        for l in 0..2 {
            let lhs = on_p(&op(&p, &[(vec![Letter::Zperp(k), Letter::Zperp(l)], c(1.0))]));
            let d = if k == l { 4.0 * PI } else { 0.0 };
            let rhs = on_p(&op(&p, &[(vec![Letter::BPerp(k), Letter::BPerp(l)], c(1.0)), (vec![], c(d))]))
                .scale(c(1.0 / (16.0 * PI * PI)));
            assert!(lhs.max_diff(&rhs) < 1e-12);
        }
    }
    let lhs = on_p(&op(&p, &[(vec![Letter::Zperp(1); 4], c((4.0 * PI).powi(4)))]));
    let rhs = on_p(&op(
        &p,
        &[
            (vec![Letter::BPerp(1); 4], c(1.0)),
            (vec![Letter::BPerp(1); 2], c(24.0 * PI)),
            (vec![], c(3.0 * (4.0 * PI).powi(2))),
        ],
    ));
    assert!(lhs.max_diff(&rhs) < 1e-9 * (4.0 * PI).powi(4));
}

#[test]
fn normal_second_moment_projection() {
    let p = ModelParams::kahler_standard(2, 2).unwrap();
    for k in 0..2 {
        for l in 0..2 {
            let v = project(&on_p(&op(&p, &[(vec![Letter::Zperp(k), Letter::Zperp(l)], c(1.0))])));
            let d = if k == l { 1.0 / (4.0 * PI) } else { 0.0 };
            assert!(v.max_diff(&KernelPolynomial::identity(&p).scale(c(d))) < 1e-14);
        }
    }
}

#[test]
fn reproducing_property() {
    // int P(Z, W) P(W, Z') dW = P(Z, Z') on n = 2, n0 = 1 with general eigenvalues
    let p = ModelParams::new(2, 1, vec![1.6], vec![2.3]).unwrap();
    let k = KernelPolynomial::identity(&p);
    let nodes = bergman_lab::numeric::gauss_legendre(64, -6.0, 6.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..4 {
        let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let zp: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut acc = c(0.0);
        for &(x, wx) in &nodes {
            for &(y, wy) in &nodes {
                for &(t, wt) in &nodes {
                    let w = [x, y, t];
                    acc += k.eval(&z, &w).unwrap() * k.eval(&w, &zp).unwrap() * (wx * wy * wt);
                }
            }
        }
        let direct = k.eval(&z, &zp).unwrap();
        assert!((acc - direct).norm() < 1e-10 * direct.norm(), "{acc} vs {direct}");
    }
}

fn random_kernel(p: &ModelParams, seed: u64, max_deg: u32, terms: usize) -> KernelPolynomial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nh = p.nh();
    let n0 = p.n0;
    let mut vars = vec![];
    for i in 0..nh {
        vars.extend([KVar::Z(i), KVar::Zbar(i), KVar::Zp(i), KVar::Zbarp(i)]);
    }
    for j in 0..n0 {
        vars.extend([KVar::Zperp(j), KVar::Zperpp(j)]);
    }
    let mut k = KernelPolynomial::zero(p);
    for _ in 0..terms {
        let deg = rng.gen_range(0..=max_deg);
        let mono: Vec<(KVar, u8)> = (0..deg).map(|_| (vars[rng.gen_range(0..vars.len())], 1)).collect();
        k = k.add(&KernelPolynomial::monomial(p, &mono, crand(&mut rng))).unwrap();
    }
    k
}

fn letter(p: &ModelParams, l: Letter) -> LadderPolynomial {
    LadderPolynomial::letter(p, l).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn commutators_act_as_constants(seed in any::<u64>(), a in 0.5f64..8.0, ap in 0.5f64..8.0) {
        let p = ModelParams::new(3, 1, vec![a, 1.3], vec![ap]).unwrap();
        let k = random_kernel(&p, seed, 6, 6);
        let apply = |l: Letter, k: &KernelPolynomial| apply_to_kernel(&letter(&p, l), k).unwrap();
        let scale = 1.0 + k.q().max_abs_coeff();
        let checks = [
            (Letter::B(0), Letter::BPlus(0), -2.0 * a),
            (Letter::B(0), Letter::BPlus(1), 0.0),
            (Letter::BPerp(0), Letter::BPerpPlus(0), -2.0 * ap),
            (Letter::B(1), Letter::Z(1), -2.0),
            (Letter::BPlus(0), Letter::Zbar(0), 2.0),
            (Letter::BPerp(0), Letter::B(1), 0.0),
        ];
        for (x, y, cst) in checks {
            let lhs = apply(x, &apply(y, &k)).sub(&apply(y, &apply(x, &k))).unwrap();
            let diff = lhs.sub(&k.scale(c(cst))).unwrap();
            prop_assert!(diff.q().max_abs_coeff() < 1e-10 * scale * (1.0 + a + ap).powi(2));
        }
    }

    #[test]
    fn eigen_components_are_eigenvectors(seed in any::<u64>()) {
        let p = ModelParams::new(2, 1, vec![1.7], vec![2.9]).unwrap();
        let k = random_kernel(&p, seed, 5, 4);
        let ef = to_eigen_form(&k).unwrap();
        let l = model_operator(&p).unwrap();
        for ((alpha, gamma), f) in ef.components() {
            let comp = ef.component_kernel(alpha, gamma, f).unwrap();
            let lc = apply_to_kernel(&l, &comp).unwrap();
            let lam = p.eigenvalue(alpha, gamma);
            let tol = 1e-10 * (1.0 + comp.q().max_abs_coeff()) * (1.0 + lam);
            prop_assert!(lc.max_diff(&comp.scale(c(lam))) < tol);
        }
    }

    #[test]
    fn eigen_round_trip(seed in any::<u64>()) {
        let p = ModelParams::kahler_standard(2, 1).unwrap();
        let k = random_kernel(&p, seed, 8, 5);
        let back = to_eigen_form(&k).unwrap().to_kernel().unwrap();
        prop_assert!(back.max_diff(&k) <= 1e-12 * (1.0 + k.q().max_abs_coeff()));
    }

    #[test]
    fn model_kernel_is_hermitian(x in proptest::collection::vec(-2.0f64..2.0, 5), y in proptest::collection::vec(-2.0f64..2.0, 5)) {
        let p = ModelParams::new(3, 1, vec![1.1, 4.0], vec![0.7]).unwrap();
        let a = ModelPoint::from_real(&p, &x).unwrap();
        let b = ModelPoint::from_real(&p, &y).unwrap();
        prop_assert_eq!(model_kernel(&p, &a, &b), model_kernel(&p, &b, &a).conj());
    }
}
