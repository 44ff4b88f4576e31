use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{emit_report, parse_report, ExperimentConfig, Format, Report, ReportRow};
use crate::asymptotics::*;
use crate::coefficients::oracle::{random_self_adjoint, triple_product_max};
use crate::coefficients::{brute_force_coefficient, build_o1, compute_coefficients, expansion_coefficient, PointGeometry};
use crate::model::{LadderPolynomial, ModelParams};
use crate::projective::{cp1_point_geometry, make_section_space, ProjectiveModel, Selector};
use crate::toeplitz::*;
use crate::{Result, C64};

const CP1: ProjectiveModel = ProjectiveModel::Cp1O2;

/// Runs `f` over the grid in parallel, keeping the grid order.
fn per_level<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<ReportRow>>
where
    F: Fn(u32) -> Result<Vec<ReportRow>> + Sync,
{
    let chunks: Vec<Vec<ReportRow>> = cfg.p_grid.par_iter().map(|&p| f(p)).collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn level_rest(model: ProjectiveModel) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); model.dim() - 1]
}

pub(super) fn expand_diagonal(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let rest = level_rest(cfg.model);
    let values: Vec<f64> = cfg.p_grid.par_iter().map(|&p| rescaled_diagonal(cfg.model, p, &rest)).collect::<Result<_>>()?;
    let mut rows = vec![];
    for (&p, &v) in cfg.p_grid.iter().zip(&values) {
        rows.push(ReportRow::info(cfg, Some(p), "rescaled_diagonal", v));
        if cfg.model == CP1 {
            let s = singular_weight_scaling(p)?;
            rows.push(ReportRow::check(cfg, Some(p), "singular_scaling", s, 1.0 + 0.5 / p as f64, 1e-12));
        }
    }
    let samples: Vec<(f64, f64)> = cfg.p_grid.iter().map(|&p| p as f64).zip(values).collect();
    let fit = richardson_extrapolate(&samples, &HALF_INTEGER_GRID)?;
    let c = |e| fit.coefficient(e).unwrap_or(f64::NAN);
    rows.push(ReportRow::check(cfg, None, "c0", c(0.0), 2f64.sqrt(), cfg.tol("c0")));
    rows.push(ReportRow::check(cfg, None, "c_half", c(0.5), 0.0, cfg.tol("c_half")));
    if cfg.model == CP1 {
        rows.push(ReportRow::check(cfg, None, "c1", c(1.0), 3.0 * 2f64.sqrt() / 8.0, cfg.tol("c1")));
    } else {
        rows.push(ReportRow::info(cfg, None, "c1", c(1.0)));
    }
    rows.push(ReportRow::info(cfg, None, "fit_residual", fit.residual));
    rows.push(ReportRow::info(cfg, None, "fit_condition", fit.condition));
    Ok(rows)
}

pub(super) fn offdiag_decay(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let angles = if cfg.model == CP1 { 1 } else { 6 };
    per_level(cfg, |p| {
        let rate = decay_fit(&decay_samples(cfg.model, p, 0.15, 31, angles)?, p)?;
        Ok(vec![ReportRow::check(cfg, Some(p), "decay_rate", rate, 2.0 * PI, cfg.tol("rate") * 2.0 * PI)])
    })
}

pub(super) fn localize(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    per_level(cfg, |p| {
        let ratio = localization_scan(cfg.model, p, &[2.0])?[0].ratio;
        // diagonal kernel is a multiple of (r / (1 + r^2))^{2p}
        let exact = (16.0f64 / 25.0).powi(p as i32);
        Ok(vec![
            ReportRow::check(cfg, Some(p), "ratio_r2", ratio, exact, cfg.tol("exact") * exact),
            ReportRow::below(cfg, Some(p), "ratio_r2_bound", ratio, cfg.tol("bound")),
        ])
    })
}

pub(super) fn normal_slice(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    per_level(cfg, |p| {
        let a = normal_slice_integral(cfg.model, p, 0.5)?;
        let b = normal_slice_integral(cfg.model, p, 1.0)?;
        if cfg.model == CP1 {
            Ok(vec![
                ReportRow::check(cfg, Some(p), "slice_integral", a.value.re, 1.0, cfg.tol("slice")),
                ReportRow::check(cfg, Some(p), "slice_cutoff_change", (a.value - b.value).norm(), 0.0, 1e-10),
            ])
        } else {
            // only the leading term is known on the plane
            Ok(vec![ReportRow::info(cfg, Some(p), "slice_integral", a.value.re)])
        }
    })
}

pub(super) fn dimensions(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let report = invariant_dimension_report(cfg.model, &cfg.p_grid);
    let mut rows: Vec<ReportRow> = report
        .rows
        .iter()
        .map(|&(p, d, _)| {
            let exact = if cfg.model == CP1 { 1.0 } else { p as f64 + 1.0 };
            ReportRow::check(cfg, Some(p), "invariant_dimension", d as f64, exact, 0.0)
        })
        .collect();
    let slope = if cfg.model == CP1 { 0.0 } else { 1.0 };
    if cfg.p_grid.len() > 1 {
        rows.push(ReportRow::check(cfg, None, "slope", report.slope, slope, cfg.tol("slope")));
    }
    Ok(rows)
}

pub(super) fn coefficients_engine(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let g = cp1_point_geometry()?;
    let r = compute_coefficients(&g, None)?;
    let target = 3.0 * 2f64.sqrt() / 8.0;
    let mut rows = vec![
        ReportRow::check(cfg, None, "p2_engine_vs_closed", (r.p2_zero_engine - r.p2_zero_closed).norm(), 0.0, cfg.tol("closed")),
        ReportRow::check(cfg, None, "p2_engine", r.p2_zero_engine.re, target, cfg.tol("closed")),
        ReportRow::check(cfg, None, "phi1_numeric", r.phi1_numeric.norm(), 0.0, cfg.tol("phi1")),
        ReportRow::check(cfg, None, "phi1_closed", r.phi1_closed.norm(), 0.0, cfg.tol("phi1")),
    ];
    let samples: Vec<(f64, f64)> = cfg
        .p_grid
        .par_iter()
        .map(|&p| rescaled_diagonal(CP1, p, &[]).map(|v| (p as f64, v)))
        .collect::<Result<_>>()?;
    let fit = richardson_extrapolate(&samples, &HALF_INTEGER_GRID)?;
    rows.push(ReportRow::check(
        cfg,
        None,
        "p2_engine_vs_richardson",
        r.p2_zero_engine.re,
        fit.coefficient(1.0).unwrap_or(f64::NAN),
        cfg.tol("richardson"),
    ));
    Ok(rows)
}

/// Largest engine/oracle difference on random points of the unit box.
fn oracle_gap(params: &ModelParams, o1: &LadderPolynomial, o2: &LadderPolynomial, n_trunc: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for r in [1, 2] {
        let engine = expansion_coefficient(r, o1, o2)?;
        let oracle = brute_force_coefficient(r, o1, o2, n_trunc)?;
        for _ in 0..12 {
            let mut pick = || -> Vec<f64> {
                let mut x = vec![];
                for _ in 0..params.nh() {
                    let (rho, t) = (rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..2.0 * PI));
                    x.extend([rho * t.cos(), rho * t.sin()]);
                }
                x.extend((0..params.n0).map(|_| rng.gen_range(-1.0..1.0)));
                x
            };
            let (x, y) = (pick(), pick());
            worst = worst.max((engine.eval(&x, &y)? - oracle.eval(&x, &y)?).norm());
        }
    }
    Ok(worst)
}

/// `p` in the rows is the oracle truncation order.
pub(super) fn coefficients_oracle(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    per_level(cfg, |n_trunc| {
        let mut rows = vec![];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ n_trunc as u64);
        for (n, n0) in [(1, 1), (2, 2), (2, 1), (3, 2)] {
            let params = ModelParams::kahler_standard(n, n0)?;
            let mut worst = 0.0f64;
            for _ in 0..3 {
                let o1 = random_self_adjoint(&params, &mut rng, 4, 6)?;
                let o2 = random_self_adjoint(&params, &mut rng, 4, 6)?;
                worst = worst.max(oracle_gap(&params, &o1, &o2, n_trunc as usize, &mut rng)?);
            }
            rows.push(ReportRow::check(cfg, Some(n_trunc), &format!("oracle_gap_n{n}_n0{n0}"), worst, 0.0, cfg.tol("oracle")));
        }
        let mut worst = 0.0f64;
        let shapes = [(1, 1), (2, 2), (2, 1), (3, 2), (3, 1)];
        for t in 0..100 {
            let (n, n0) = shapes[t % shapes.len()];
            let g = PointGeometry::random_admissible(&ModelParams::kahler_standard(n, n0)?, &mut rng, 1.0);
            worst = worst.max(triple_product_max(&build_o1(&g)?, n_trunc as usize)?);
        }
        rows.push(ReportRow::check(cfg, Some(n_trunc), "first_order_projection", worst, 0.0, cfg.tol("first_order")));
        Ok(rows)
    })
}

pub(super) fn toeplitz_symbol(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let target = 1.0 / (2.0 * PI.sqrt());
    let levels: Vec<(f64, f64)> = cfg
        .p_grid
        .par_iter()
        .map(|&p| {
            let space = make_section_space(CP1, p);
            let t = toeplitz_matrix(&space, &Symbol::level_fraction(), Selector::Full)?;
            let worst = (0..space.dim())
                .flat_map(|i| (0..space.dim()).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let exact = if i == j { (j as f64 + 1.0) / (2.0 * p as f64 + 2.0) } else { 0.0 };
                    (t.entries[(i, j)] - C64::new(exact, 0.0)).norm()
                })
                .fold(0.0, f64::max);
            let value = match invariant_toeplitz(&space, &Symbol::level_fraction())? {
                InvariantToeplitz::Scalar(v) => v.re,
                InvariantToeplitz::Matrix(_) => f64::NAN,
            };
            Ok((worst, value))
        })
        .collect::<Result<_>>()?;
    let mut rows = vec![];
    for (i, (&p, &(worst, value))) in cfg.p_grid.iter().zip(&levels).enumerate() {
        rows.push(ReportRow::check(cfg, Some(p), "entry_error", worst, 0.0, cfg.tol("entries")));
        // the relative tolerance is meant for p >= 400, below that only the trend is checked
        if p >= 400 {
            rows.push(ReportRow::check(cfg, Some(p), "reduced_symbol", value, target, cfg.tol("symbol") * target));
        } else {
            rows.push(ReportRow::info(cfg, Some(p), "reduced_symbol", value));
        }
        if i > 0 {
            let law = cfg.p_grid[i - 1] as f64 / p as f64;
            let ratio = (value - target) / (levels[i - 1].1 - target);
            rows.push(ReportRow::check(cfg, Some(p), "symbol_error_ratio", ratio, law, cfg.tol("halving") * law));
        }
    }
    Ok(rows)
}

pub(super) fn isometry(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let defects: Vec<f64> = cfg
        .p_grid
        .par_iter()
        .map(|&p| isometry_defect(&make_section_space(CP1, p)))
        .collect::<Result<_>>()?;
    let mut rows = vec![];
    for (i, (&p, &d)) in cfg.p_grid.iter().zip(&defects).enumerate() {
        let lead = 3.0 / (8.0 * p as f64);
        rows.push(ReportRow::check(cfg, Some(p), "defect", d, lead, cfg.tol("defect") * lead));
        if i > 0 {
            // the first-order law predicts the ratio of the levels
            let law = cfg.p_grid[i - 1] as f64 / p as f64;
            rows.push(ReportRow::check(cfg, Some(p), "defect_ratio", d / defects[i - 1], law, cfg.tol("halving") * law));
        }
    }
    Ok(rows)
}

pub(super) fn commutator(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let (x1, x2) = (Symbol::sphere(1), Symbol::sphere(2));
    let res: Vec<f64> = cfg
        .p_grid
        .par_iter()
        .map(|&p| commutator_residual(&make_section_space(CP1, p), &x1, &x2))
        .collect::<Result<_>>()?;
    let mut rows = vec![];
    for (i, (&p, &r)) in cfg.p_grid.iter().zip(&res).enumerate() {
        rows.push(ReportRow::info(cfg, Some(p), "residual", r));
        if i > 0 {
            let law = p as f64 / cfg.p_grid[i - 1] as f64;
            rows.push(ReportRow::check(cfg, Some(p), "residual_ratio", res[i - 1] / r, law, cfg.tol("ratio")));
        }
    }
    Ok(rows)
}

pub(super) fn selftest(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let tol = cfg.tol("trivial");
    let mut rows = vec![];
    let mut check = |name: &str, value: f64, target: f64| rows.push(ReportRow::check(cfg, None, name, value, target, tol));

    let flat: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0].iter().map(|&p| (p, 7.0)).collect();
    let fit = richardson_extrapolate(&flat, &HALF_INTEGER_GRID)?;
    check("richardson_constant", fit.coefficients[0], 7.0);
    let gauss: Vec<(f64, f64)> = (1..20).map(|i| (0.01 * i as f64, (-5.0 * 30.0 * (0.01 * i as f64).powi(2)).exp())).collect();
    check("decay_synthetic", decay_fit(&gauss, 30)?, 5.0);
    check("localize_p1", localization_scan(CP1, 1, &[1.0])?[0].ratio, 1.0);
    check("slice_zero", slice_integral(|_| Ok(C64::new(0.0, 0.0)), 0.5, 1.0)?.value.norm(), 0.0);

    let s0 = make_section_space(CP1, 0);
    let u = [C64::new(0.3, 0.4)];
    let full = s0.bergman_kernel(Selector::Full, &u, &u)?;
    check("average_p0", (s0.group_average_kernel(&u, &u, 8)? - full).norm(), 0.0);

    let s = make_section_space(CP1, 5);
    let id = toeplitz_matrix(&s, &Symbol::constant(C64::new(1.0, 0.0)), Selector::Full)?.entries;
    check("toeplitz_one", (id - DMatrix::<C64>::identity(s.dim(), s.dim())).iter().map(|v| v.norm()).fold(0.0, f64::max), 0.0);
    let t = toeplitz_matrix(&s, &Symbol::sphere(1), Selector::Full)?.entries;
    check("toeplitz_hermitian", (&t - t.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max), 0.0);
    let zero = match invariant_toeplitz(&s, &Symbol::constant(C64::new(0.0, 0.0)))? {
        InvariantToeplitz::Scalar(v) => v.norm(),
        InvariantToeplitz::Matrix(m) => m.norm(),
    };
    check("toeplitz_zero", zero, 0.0);
    check("commutator_equal", commutator_residual(&s, &Symbol::sphere(1), &Symbol::sphere(1))?, 0.0);
    check("commutator_constant", commutator_residual(&s, &Symbol::sphere(1), &Symbol::constant(C64::new(3.0, 0.0)))?, 0.0);

    let params = ModelParams::kahler_standard(2, 1)?;
    let z = LadderPolynomial::zero(&params);
    let p2 = expansion_coefficient(2, &z, &z)?;
    check("zero_operator_coefficient", p2.eval(&[0.1, 0.2, 0.3], &[0.3, 0.2, 0.1])?.norm(), 0.0);

    let empty = emit_report(&Report::default(), Format::Csv)?;
    check("csv_empty_lines", empty.iter().filter(|&&b| b == b'\n').count() as f64, 1.0);
    let one = Report { rows: vec![ReportRow::info(cfg, Some(1), "x", 0.5)] };
    check("csv_one_row_lines", emit_report(&one, Format::Csv)?.iter().filter(|&&b| b == b'\n').count() as f64, 2.0);
    let back = parse_report(&emit_report(&one, Format::Json)?, Format::Json)?;
    check("json_round_trip", if back == one { 0.0 } else { 1.0 }, 0.0);
    Ok(rows)
}
