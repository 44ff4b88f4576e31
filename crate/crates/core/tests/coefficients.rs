//! Coefficient engine against the matrix oracle and the closed forms.

use std::f64::consts::PI;

use bergman_lab::coefficients::oracle::{brute_force_coefficient, triple_product_max};
use bergman_lab::coefficients::*;
use bergman_lab::model::*;
use bergman_lab::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn std(n: usize, n0: usize) -> ModelParams {
    ModelParams::kahler_standard(n, n0).unwrap()
}

/// Random self-adjoint `X + X^*` with words of degree at most `deg`.
fn random_operator(p: &ModelParams, rng: &mut ChaCha8Rng, deg: usize, terms: usize) -> LadderPolynomial {
    let mut letters = vec![];
    for i in 0..p.nh() {
        letters.extend([Letter::Z(i), Letter::Zbar(i), Letter::B(i), Letter::BPlus(i)]);
    }
    for j in 0..p.n0 {
        letters.extend([Letter::Zperp(j), Letter::BPerp(j), Letter::BPerpPlus(j)]);
    }
    let mut words = vec![];
    for _ in 0..terms {
        let d = rng.gen_range(1..=deg);
        let w: Vec<Letter> = (0..d).map(|_| letters[rng.gen_range(0..letters.len())]).collect();
        words.push((w, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    }
    let x = normal_order(p, &words).unwrap();
    x.add(&x.adjoint().unwrap()).unwrap()
}

fn random_pair(p: &ModelParams, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    // points with every complex coordinate and every real coordinate of modulus <= 1
    let mut pick = || {
        let mut x = vec![];
        for _ in 0..p.nh() {
            let r = rng.gen_range(0.0f64..1.0).sqrt();
            let t = rng.gen_range(0.0..2.0 * PI);
            x.extend([r * t.cos(), r * t.sin()]);
        }
        for _ in 0..p.n0 {
            x.push(rng.gen_range(-1.0..1.0));
        }
        x
    };
    (pick(), pick())
}

pub fn cp1_geometry() -> PointGeometry {
    let mut g = PointGeometry::zeros(&std(1, 1));
    g.d2logh.normal[0][0] = -PI;
    g.gdot[0][0][0][0] = -4.0 * PI;
    g
}

#[test]
fn oracle_equivalence_random_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (n, n0) in [(1, 1), (2, 2), (2, 1), (3, 2)] {
        let p = std(n, n0);
        for _ in 0..3 {
            let o1 = random_operator(&p, &mut rng, 4, 6);
            let o2 = random_operator(&p, &mut rng, 4, 6);
            for r in [1, 2] {
                let engine = expansion_coefficient(r, &o1, &o2).unwrap();
                let oracle = brute_force_coefficient(r, &o1, &o2, 40).unwrap();
                for _ in 0..15 {
                    let (x, y) = random_pair(&p, &mut rng);
                    let a = engine.eval(&x, &y).unwrap();
                    let b = oracle.eval(&x, &y).unwrap();
                    assert!((a - b).norm() < 1e-8, "n={n} n0={n0} r={r}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn oracle_truncation_stability() {
    let mut rng = ChaCha8Rng::seed_from_u64(3040);
    for (n, n0) in [(2, 1), (3, 2)] {
        let p = std(n, n0);
        let o1 = random_operator(&p, &mut rng, 3, 5);
        let o2 = random_operator(&p, &mut rng, 3, 5);
        let k30 = brute_force_coefficient(2, &o1, &o2, 30).unwrap();
        let k40 = brute_force_coefficient(2, &o1, &o2, 40).unwrap();
        for _ in 0..15 {
            let (x, y) = random_pair(&p, &mut rng);
            assert!((k30.eval(&x, &y).unwrap() - k40.eval(&x, &y).unwrap()).norm() < 1e-8);
        }
    }
}

#[test]
fn oracle_reproduces_model_kernel_for_zero_operators() {
    let p = std(2, 1);
    let z = LadderPolynomial::zero(&p);
    let k = brute_force_coefficient(1, &z, &z, 30).unwrap();
    assert_eq!(k.eval(&[0.2, 0.1, -0.4], &[0.3, 0.0, 0.5]).unwrap(), c(0.0));
    let pk = bergman_lab::coefficients::oracle::truncated_projection(&p, 30).unwrap();
    let a = ModelPoint::from_real(&p, &[0.2, 0.1, -0.4]).unwrap();
    let b = ModelPoint::from_real(&p, &[0.3, 0.0, 0.5]).unwrap();
    assert!((pk.eval_at(&a, &b).unwrap() - model_kernel(&p, &a, &b)).norm() < 1e-12);
}

#[test]
fn moment_operator_against_hand_result_and_oracle() {
    let p = std(1, 1);
    let mu = C64::new(0.0, 0.61);
    let mut g = PointGeometry::zeros(&p);
    g.mu_e.values[0] = mu;
    let o1 = build_o1(&g).unwrap();
    let zero = LadderPolynomial::zero(&p);
    let engine = expansion_coefficient(1, &o1, &zero).unwrap();
    let oracle = brute_force_coefficient(1, &o1, &zero, 30).unwrap();
    for (x, y) in [(0.0, 0.0), (0.5, -1.0), (1.0, 0.25)] {
        let pv = KernelPolynomial::identity(&p).eval(&[x], &[y]).unwrap();
        let hand = -C64::i() * mu * (x + y) * pv;
        assert!((engine.eval(&[x], &[y]).unwrap() - hand).norm() < 1e-12);
        assert!((oracle.eval(&[x], &[y]).unwrap() - hand).norm() < 1e-8);
    }
}

#[test]
fn first_order_vanishes_in_kernel_for_geometric_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(922);
    let shapes = [(1, 1), (2, 2), (2, 1), (3, 2), (3, 1)];
    for t in 0..100 {
        let (n, n0) = shapes[t % shapes.len()];
        let g = PointGeometry::random_admissible(&std(n, n0), &mut rng, 1.0);
        let o1 = build_o1(&g).unwrap();
        let worst = triple_product_max(&o1, 12).unwrap();
        assert!(worst < 1e-10, "draw {t}: {worst}");
    }
}

#[test]
fn projective_line_coefficients() {
    let g = cp1_geometry();
    let r = compute_coefficients(&g, None).unwrap();
    let target = 3.0 * 2f64.sqrt() / 8.0;
    assert!((r.p2_zero_closed - c(target)).norm() < 1e-12);
    assert!((r.p2_zero_engine - r.p2_zero_closed).norm() < 1e-8);
    assert!(r.phi1_numeric.norm() < 1e-12);
    assert!(r.phi1_closed.norm() < 1e-12);
}

#[test]
fn engine_matches_closed_form_on_consistent_geometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(474);
    for n0 in 1..=3 {
        for _ in 0..4 {
            let g = PointGeometry::random_consistent(&std(n0, n0), &mut rng, 0.7);
            let r = compute_coefficients(&g, None).unwrap();
            assert!((r.p2_zero_engine - r.p2_zero_closed).norm() < 1e-10, "{} vs {}", r.p2_zero_engine, r.p2_zero_closed);
        }
    }
}

#[test]
fn phi1_against_quadrature_of_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(656);
    for n0 in 1..=2 {
        let g = PointGeometry::random_consistent(&std(n0, n0), &mut rng, 0.8);
        let o1 = build_o1(&g).unwrap();
        let o2 = build_o2_fully_normal(&g).unwrap();
        let numeric = phi1_numeric(&o1, &o2).unwrap();
        let oracle = brute_force_coefficient(2, &o1, &o2, 30).unwrap();
        let quad = oracle.normal_slice_integral(48, 4.0).unwrap();
        assert!((numeric - quad).norm() < 1e-6, "{numeric} vs {quad}");
    }
}

#[test]
fn first_coefficient_is_zero_at_origin() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    for (n, n0) in [(1, 1), (2, 1), (3, 2)] {
        let p = std(n, n0);
        let g = PointGeometry::random_admissible(&p, &mut rng, 1.0);
        let o1 = build_o1(&g).unwrap();
        let p1 = expansion_coefficient(1, &o1, &LadderPolynomial::zero(&p)).unwrap();
        let o = ModelPoint::origin(&p);
        assert!(p1.eval_at(&o, &o).unwrap().norm() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn parity_and_hermiticity(seed in any::<u64>(), shape in 0usize..4) {
        let (n, n0) = [(1, 1), (2, 2), (2, 1), (3, 2)][shape];
        let p = std(n, n0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = PointGeometry::random_admissible(&p, &mut rng, 1.0);
        let o1 = build_o1(&g).unwrap();
        let o2 = if n == n0 { build_o2_fully_normal(&g).unwrap() } else { random_operator(&p, &mut rng, 4, 4) };
        // the second-order operator of a geometry is even; keep only even words for the random one
        let o2 = if n == n0 { o2 } else {
            let even: Vec<_> = o2.terms().filter(|(w, _)| w.len() % 2 == 0).collect();
            normal_order(&p, &even).unwrap()
        };
        for r in [1u32, 2] {
            let k = expansion_coefficient(r, &o1, &o2).unwrap();
            let sign = if r == 1 { -1.0 } else { 1.0 };
            for _ in 0..6 {
                let (x, y) = random_pair(&p, &mut rng);
                let v = k.eval(&x, &y).unwrap();
                let nx: Vec<f64> = x.iter().map(|t| -t).collect();
                let ny: Vec<f64> = y.iter().map(|t| -t).collect();
                let scale = 1.0 + v.norm();
                prop_assert!((k.eval(&nx, &ny).unwrap() - v * sign).norm() < 1e-10 * scale);
                prop_assert!((k.eval(&y, &x).unwrap().conj() - v).norm() < 1e-10 * scale);
            }
        }
    }
}
