//! Section spaces against quadrature and the group average.

use std::f64::consts::PI;

use bergman_lab::projective::*;
use bergman_lab::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CP1: ProjectiveModel = ProjectiveModel::Cp1O2;
const CP2: ProjectiveModel = ProjectiveModel::Cp2O2LevelHalf;

#[test]
fn gram_quadrature_projective_line() {
    for p in [1, 7, 20, 50] {
        let s = make_section_space(CP1, p);
        let idx: Vec<usize> = (0..s.dim()).collect();
        let g = s.gram_quadrature(&idx, 4 * p as usize + 16, 2 * s.k as usize + 2);
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                let scale = (0.5 * (s.ln_norms[i] + s.ln_norms[j])).exp();
                let target = if i == j { scale } else { 0.0 };
                let err = (g[(i, j)] - C64::new(target, 0.0)).norm() / scale;
                assert!(err < 1e-10, "p={p} ({i},{j}): {err}");
            }
        }
    }
}

#[test]
fn norms_quadrature_projective_plane() {
    for p in [1, 5, 10, 15] {
        let s = make_section_space(CP2, p);
        let q = s.norms_quadrature(4 * p as usize + 16);
        for (i, v) in q.iter().enumerate() {
            let exact = s.ln_norms[i].exp();
            assert!((v - exact).abs() < 1e-10 * exact, "p={p} {:?}", s.basis[i]);
        }
    }
}

#[test]
fn gram_quadrature_projective_plane_small() {
    let s = make_section_space(CP2, 2);
    let idx: Vec<usize> = (0..s.dim()).collect();
    let g = s.gram_quadrature(&idx, 24, 2 * s.k as usize + 2);
    for i in 0..s.dim() {
        for j in 0..s.dim() {
            let scale = (0.5 * (s.ln_norms[i] + s.ln_norms[j])).exp();
            let target = if i == j { scale } else { 0.0 };
            assert!((g[(i, j)].re - target).abs() + g[(i, j)].im.abs() < 1e-10 * scale);
        }
    }
}

#[test]
fn invariant_trace_is_dimension() {
    for (model, p) in [(CP1, 1), (CP1, 12), (CP2, 1), (CP2, 6)] {
        let s = make_section_space(model, p);
        let tr = s.integrate(
            |u| s.bergman_kernel(Selector::Invariant, u, u).unwrap(),
            4 * p as usize + 16,
            1,
        );
        let d = s.invariant_dimension() as f64;
        assert!((tr.re - d).abs() < 1e-10 * d && tr.im.abs() < 1e-12, "{model:?} p={p}: {tr}");
    }
}

#[test]
fn closed_form_volume() {
    // the full kernel is the constant (k+n)!/(2^n k!), so its trace is the dimension
    let s = make_section_space(CP2, 3);
    let vol = s.integrate(|_| C64::new(1.0, 0.0), 8, 1).re;
    assert!((vol - 2.0).abs() < 1e-13);
    let full = s.bergman_kernel(Selector::Full, &[C64::new(0.2, 0.0), C64::new(0.0, 0.5)], &[C64::new(0.2, 0.0), C64::new(0.0, 0.5)]).unwrap();
    assert!((full.re * vol - s.dim() as f64).abs() < 1e-10);
}

#[test]
fn group_average_matches_invariant_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for p in [1u32, 2, 5, 13, 27, 40] {
        let s = make_section_space(CP1, p);
        for _ in 0..5 {
            let u = [C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))];
            let v = [C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))];
            let a = s.group_average_kernel(&u, &v, 4 * p as usize + 8).unwrap();
            let b = s.bergman_kernel(Selector::Invariant, &u, &v).unwrap();
            assert!((a - b).norm() < 1e-8 * b.norm().max(1.0), "p={p}: {a} vs {b}");
        }
    }
    let s = make_section_space(CP2, 9);
    let u = [C64::new(0.9, 0.8), C64::new(-0.3, 0.4)];
    let v = [C64::new(0.2, -1.1), C64::new(0.6, 0.1)];
    let a = s.group_average_kernel(&u, &v, 44).unwrap();
    let b = s.bergman_kernel(Selector::Invariant, &u, &v).unwrap();
    assert!((a - b).norm() < 1e-10 * b.norm());
}

#[test]
fn large_levels_stay_finite() {
    let s = make_section_space(CP1, 2000);
    let v = s.bergman_kernel(Selector::Invariant, &[C64::new(1.0, 0.0)], &[C64::new(1.0, 0.0)]).unwrap();
    let stirling = (2000.0 / PI).sqrt();
    assert!(v.re.is_finite() && (v.re / stirling - 1.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn diagonal_kernels_are_nonnegative(p in 0u32..60, re in -3.0f64..3.0, im in -3.0f64..3.0, nu in -3i64..3) {
        let s = make_section_space(CP1, p);
        let u = [C64::new(re, im)];
        for sel in [Selector::Full, Selector::Invariant, Selector::Weight(nu)] {
            if let Ok(v) = s.bergman_kernel(sel, &u, &u) {
                prop_assert!(v.re >= 0.0 && v.im.abs() <= 1e-12 * v.re.max(1e-300));
            }
        }
    }

    #[test]
    fn kernel_is_hermitian(p in 1u32..12, a in prop::array::uniform4(-2.0f64..2.0)) {
        let s = make_section_space(CP2, p);
        let u = [C64::new(a[0], a[1]), C64::new(a[2], 0.3)];
        let v = [C64::new(a[3], -0.2), C64::new(a[1], a[0])];
        let x = s.bergman_kernel(Selector::Invariant, &u, &v).unwrap();
        let y = s.bergman_kernel(Selector::Invariant, &v, &u).unwrap();
        prop_assert!((x - y.conj()).norm() <= 1e-12 * x.norm().max(1e-300));
    }
}
