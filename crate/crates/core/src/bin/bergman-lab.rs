//! Command-line runner for the experiment registry.

use std::path::PathBuf;
use std::process::ExitCode;

use bergman_lab::cli::{self, ExperimentConfig, Format, REGISTRY};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bergman-lab", version, about = "Exact checks of invariant Bergman kernel asymptotics")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON configuration and/or flags.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        experiment: Option<String>,
        /// `CP1_O2` or `CP2_O2_level_half`.
        #[arg(long)]
        model: Option<String>,
        /// Drop levels above this value.
        #[arg(long)]
        pmax: Option<u32>,
        /// Output file; the format follows the extension unless the config sets one.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the trivial checks of every module.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the experiments with their models and tolerances.
    List,
}

/// Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 bad configuration, 3 runtime error.
fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if let Err(e) = cli::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let cfg = match args.command {
        Command::List => {
            for e in REGISTRY {
                let models: Vec<&str> = e.models.iter().map(|m| m.name()).collect();
                let tols: Vec<String> = e.tolerances.iter().map(|(n, v)| format!("{n}={v:e}")).collect();
                println!("{:<20} {:<30} {:<28} {}", e.name, models.join(","), tols.join(" "), e.summary);
            }
            return ExitCode::SUCCESS;
        }
        Command::Selftest { out } => build_config(None, Some("selftest".into()), None, None, out, None),
        Command::Run { config, experiment, model, pmax, out, seed } => build_config(config, experiment, model, pmax, out, seed),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match cli::run_experiment(&cfg) {
        Ok(r) => r,
        Err(e @ (bergman_lab::Error::InvalidConfig(_) | bergman_lab::Error::UnknownExperiment(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    if let Err(e) = cli::write_report(&report, &cfg.output) {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn build_config(
    path: Option<PathBuf>,
    experiment: Option<String>,
    model: Option<String>,
    pmax: Option<u32>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> bergman_lab::Result<ExperimentConfig> {
    let mut cfg = match (&path, &experiment) {
        (Some(p), _) => ExperimentConfig::from_path(p)?,
        (None, Some(name)) => ExperimentConfig::for_experiment(name)?,
        (None, None) => return Err(bergman_lab::Error::InvalidConfig("give --config or --experiment".into())),
    };
    if let Some(name) = experiment {
        if path.is_some() && name != cfg.experiment {
            let grid_was_default = cfg.p_grid == ExperimentConfig::for_experiment(&cfg.experiment)?.p_grid;
            cfg.experiment = name;
            if grid_was_default {
                cfg.p_grid = ExperimentConfig::for_experiment(&cfg.experiment)?.p_grid;
            }
        }
    }
    if let Some(m) = model {
        let m = m.parse()?;
        if m != cfg.model && path.is_none() {
            cfg.model = m;
            cfg.p_grid = ExperimentConfig { model: m, ..cfg.clone() }.default_grid()?;
        }
        cfg.model = m;
    }
    if let Some(p) = pmax {
        cfg.cap_levels(p);
    }
    if let Some(o) = out {
        if path.is_none() || cfg.output.path.is_none() {
            cfg.output.format = if o.extension().is_some_and(|e| e == "json") { Format::Json } else { Format::Csv };
        }
        cfg.output.path = Some(o);
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}
