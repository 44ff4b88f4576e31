//! Experiment registry, configuration and reports behind the `bergman-lab` binary.

mod experiments;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::projective::ProjectiveModel;
use crate::{Error, Result};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "BERGMAN_LAB_THREADS";

/// One registry entry.
pub struct ExperimentSpec {
    pub name: &'static str,
    pub summary: &'static str,
    pub models: &'static [ProjectiveModel],
    /// Named tolerances and their defaults.
    pub tolerances: &'static [(&'static str, f64)],
    default_grid: fn(ProjectiveModel) -> Vec<u32>,
    run: fn(&ExperimentConfig) -> Result<Vec<ReportRow>>,
}

const CP1: ProjectiveModel = ProjectiveModel::Cp1O2;
const CP2: ProjectiveModel = ProjectiveModel::Cp2O2LevelHalf;
const BOTH: &[ProjectiveModel] = &[CP1, CP2];
const LINE: &[ProjectiveModel] = &[CP1];

fn doubling_100(_: ProjectiveModel) -> Vec<u32> {
    vec![100, 200, 400, 800, 1600]
}

/// The fixed experiment registry.
pub const REGISTRY: &[ExperimentSpec] = &[
    ExperimentSpec {
        name: "expand-diagonal",
        summary: "Richardson fit of p^{-(n-n0/2)} h^2 P^G_p on the zero level",
        models: BOTH,
        tolerances: &[("c0", 1e-6), ("c_half", 1e-6), ("c1", 1e-4)],
        default_grid: doubling_100,
        run: experiments::expand_diagonal,
    },
    ExperimentSpec {
        name: "offdiag-decay",
        summary: "Gaussian decay rate of the diagonal kernel across the zero level (relative tolerance)",
        models: BOTH,
        tolerances: &[("rate", 0.02)],
        default_grid: |m| if m == CP1 { vec![400] } else { vec![80] },
        run: experiments::offdiag_decay,
    },
    ExperimentSpec {
        name: "localize",
        summary: "Diagonal kernel at radius 2 over its value on the zero level",
        models: BOTH,
        tolerances: &[("exact", 1e-10), ("bound", 1e-15)],
        default_grid: |_| vec![60, 120, 240],
        run: experiments::localize,
    },
    ExperimentSpec {
        name: "normal-slice",
        summary: "Integral of h^2 P^G_p across the zero level, normalised by p^{n-n0}",
        models: BOTH,
        tolerances: &[("slice", 1e-8)],
        default_grid: |_| vec![25, 50, 100, 200],
        run: experiments::normal_slice,
    },
    ExperimentSpec {
        name: "dimensions",
        summary: "Invariant dimensions against the leading volume term",
        models: BOTH,
        tolerances: &[("slope", 1e-9)],
        default_grid: |_| (1..=40).collect(),
        run: experiments::dimensions,
    },
    ExperimentSpec {
        name: "coefficients-engine",
        summary: "Second coefficient at the origin: engine, closed form and extrapolation",
        models: LINE,
        tolerances: &[("closed", 1e-8), ("richardson", 1e-4), ("phi1", 1e-10)],
        default_grid: doubling_100,
        run: experiments::coefficients_engine,
    },
    ExperimentSpec {
        name: "coefficients-oracle",
        summary: "Coefficient engine against the truncated matrix oracle on random operators",
        models: BOTH,
        tolerances: &[("oracle", 1e-8), ("first_order", 1e-10)],
        default_grid: |_| vec![30],
        run: experiments::coefficients_oracle,
    },
    ExperimentSpec {
        name: "toeplitz-symbol",
        summary: "Toeplitz entries and the reduced principal symbol",
        models: LINE,
        tolerances: &[("entries", 1e-10), ("symbol", 3e-3), ("halving", 0.1)],
        default_grid: |_| vec![100, 200, 400],
        run: experiments::toeplitz_symbol,
    },
    ExperimentSpec {
        name: "isometry",
        summary: "Defect of the rescaled restriction map from unitarity (relative tolerance)",
        models: LINE,
        tolerances: &[("defect", 0.1), ("halving", 0.1)],
        default_grid: |_| vec![100, 200, 400],
        run: experiments::isometry,
    },
    ExperimentSpec {
        name: "commutator",
        summary: "Commutator of Toeplitz operators against the Poisson bracket",
        models: LINE,
        tolerances: &[("ratio", 0.3)],
        default_grid: |_| vec![128, 256],
        run: experiments::commutator,
    },
    ExperimentSpec {
        name: "selftest",
        summary: "Trivial example checks from every module",
        models: BOTH,
        tolerances: &[("trivial", 1e-12)],
        default_grid: |_| vec![1],
        run: experiments::selftest,
    },
];

pub fn lookup(name: &str) -> Result<&'static ExperimentSpec> {
    REGISTRY.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownExperiment(name.into()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Standard output when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// A validated experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "default_model")]
    pub model: ProjectiveModel,
    #[serde(default)]
    pub p_grid: Vec<u32>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_model() -> ProjectiveModel {
    CP1
}

impl ExperimentConfig {
    /// Defaults of the named experiment.
    pub fn for_experiment(name: &str) -> Result<Self> {
        let spec = lookup(name)?;
        let model = spec.models[0];
        Ok(Self {
            experiment: name.into(),
            model,
            p_grid: (spec.default_grid)(model),
            tolerances: BTreeMap::new(),
            output: OutputSpec::default(),
            seed: 0,
        })
    }

    /// Default grid of the experiment for the configured model.
    pub fn default_grid(&self) -> Result<Vec<u32>> {
        Ok((lookup(&self.experiment)?.default_grid)(self.model))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut c: Self = serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if c.p_grid.is_empty() {
            let spec = lookup(&c.experiment)?;
            c.p_grid = (spec.default_grid)(c.model);
        }
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Drops levels above `pmax`.
    pub fn cap_levels(&mut self, pmax: u32) {
        self.p_grid.retain(|&p| p <= pmax);
    }

    pub fn validate(&self) -> Result<&'static ExperimentSpec> {
        let spec = lookup(&self.experiment)?;
        if !spec.models.contains(&self.model) {
            return Err(Error::InvalidConfig(format!(
                "experiment `{}` does not run on {}",
                self.experiment,
                self.model.name()
            )));
        }
        if self.p_grid.is_empty() {
            return Err(Error::InvalidConfig("p_grid is empty".into()));
        }
        if self.p_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("p_grid must be strictly ascending".into()));
        }
        for (name, v) in &self.tolerances {
            if !spec.tolerances.iter().any(|t| t.0 == name) {
                return Err(Error::InvalidConfig(format!("unknown tolerance `{name}` for `{}`", self.experiment)));
            }
            if !(*v > 0.0) {
                return Err(Error::InvalidConfig(format!("tolerance `{name}` must be positive")));
            }
        }
        Ok(spec)
    }

    /// Configured tolerance, falling back to the registry default.
    pub fn tol(&self, name: &str) -> f64 {
        if let Some(v) = self.tolerances.get(name) {
            return *v;
        }
        lookup(&self.experiment)
            .ok()
            .and_then(|s| s.tolerances.iter().find(|t| t.0 == name))
            .map(|t| t.1)
            .unwrap_or_else(|| panic!("tolerance `{name}` missing from the registry"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported without a target.
    Info,
}

/// One line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub model: String,
    pub p: Option<u32>,
    pub quantity: String,
    pub value: f64,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
}

impl ReportRow {
    /// Row judged by `|value - target| <= tolerance`.
    pub fn check(cfg: &ExperimentConfig, p: Option<u32>, quantity: &str, value: f64, target: f64, tolerance: f64) -> Self {
        let ok = (value - target).abs() <= tolerance;
        Self::with_verdict(cfg, p, quantity, value, Some(target), Some(tolerance), ok)
    }

    /// Row judged by `value <= bound`.
    pub fn below(cfg: &ExperimentConfig, p: Option<u32>, quantity: &str, value: f64, bound: f64) -> Self {
        Self::with_verdict(cfg, p, quantity, value, Some(0.0), Some(bound), value.abs() <= bound)
    }

    pub fn info(cfg: &ExperimentConfig, p: Option<u32>, quantity: &str, value: f64) -> Self {
        Self {
            experiment: cfg.experiment.clone(),
            model: cfg.model.name().into(),
            p,
            quantity: quantity.into(),
            value,
            target: None,
            tolerance: None,
            verdict: Verdict::Info,
        }
    }

    fn with_verdict(
        cfg: &ExperimentConfig,
        p: Option<u32>,
        quantity: &str,
        value: f64,
        target: Option<f64>,
        tolerance: Option<f64>,
        ok: bool,
    ) -> Self {
        Self {
            experiment: cfg.experiment.clone(),
            model: cfg.model.name().into(),
            p,
            quantity: quantity.into(),
            value,
            target,
            tolerance,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

/// Rows of one run, ordered by `p`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }
}

/// Column names of the CSV output.
pub const CSV_HEADER: [&str; 8] = ["experiment", "model", "p", "quantity", "value", "target", "tolerance", "verdict"];

/// Serialises a report. Output is byte-stable for identical reports.
pub fn emit_report(report: &Report, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(vec![]);
            w.write_record(CSV_HEADER)?;
            for r in &report.rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(report)?;
            v.push(b'\n');
            Ok(v)
        }
    }
}

/// Parses a report produced by [`emit_report`].
pub fn parse_report(bytes: &[u8], format: Format) -> Result<Report> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(bytes);
            let rows = r.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>()?;
            Ok(Report { rows })
        }
        Format::Json => Ok(serde_json::from_slice(bytes)?),
    }
}

/// Runs a configuration and returns its rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = cfg.validate()?;
    log::info!("running {} on {} for p in {:?}", cfg.experiment, cfg.model.name(), cfg.p_grid);
    Ok(Report { rows: (spec.run)(cfg)? })
}

/// Writes the report where the configuration asks.
pub fn write_report(report: &Report, out: &OutputSpec) -> Result<()> {
    let bytes = emit_report(report, out.format)?;
    match &out.path {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

/// Configures the global thread pool from [`THREADS_ENV`]; unset means rayon's default.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}
