use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conical_support::config::ExperimentConfig;
use conical_support::csa::WidthRule;
use conical_support::pipeline::{self, ConeSpec};
use conical_support::{Error, Result, Vector3};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "csa", version, about = "Conical support bounds from far-field and near-field data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Noise seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare full windows against half widths in step two.
    #[arg(long)]
    strict_width: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample clean and noisy far-field matrices.
    Simulate(Common),
    /// Threshold a matrix and export its connected components.
    Separate {
        matrix: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Separate a matrix and bound each component by two cones.
    Csa {
        matrix: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Backward-cone support mask from a boundary trace.
    Nearfield {
        /// Trace file; simulated from the configuration when omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also compute the forward-cone mask and require agreement.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check the range conditions for one cone.
    Diagnose {
        matrix: PathBuf,
        /// Cone as `R,tau,z1,z2,z3`.
        #[arg(long, conflicts_with = "cones")]
        cone: Option<String>,
        /// CSA report to take the step-two cone from.
        #[arg(long)]
        cones: Option<PathBuf>,
        /// Restrict the check to one separated component (and pick its cone
        /// from `--cones`).
        #[arg(long)]
        component: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate, run the CSA and diagnose every cone.
    RunAll(Common),
}

fn load_config(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.noise.seed = seed;
    }
    if common.strict_width {
        cfg.csa.width_rule = WidthRule::Strict;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.clone());
    Ok((cfg, out))
}

fn parse_cone(text: &str) -> Result<ConeSpec> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Malformed(format!("cone `{text}` is not a list of numbers")))?;
    if v.len() != 5 {
        return Err(Error::Malformed(format!("cone `{text}` needs 5 values: R,tau,z1,z2,z3")));
    }
    let cone = ConeSpec {
        radius: v[0],
        center_time: v[1],
        center_space: Vector3::new(v[2], v[3], v[4]),
    };
    cone.validate()?;
    Ok(cone)
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let (cfg, out) = load_config(&common)?;
            print(&pipeline::cmd_simulate(&cfg, &out)?)
        }
        Command::Separate { matrix, common } => {
            let (cfg, out) = load_config(&common)?;
            print(&pipeline::cmd_separate(&matrix, &cfg, &out)?)
        }
        Command::Csa { matrix, common } => {
            let (cfg, out) = load_config(&common)?;
            print(&pipeline::cmd_csa(&matrix, &cfg, &out)?)
        }
        Command::Nearfield { trace, oracle, common } => {
            let (cfg, out) = load_config(&common)?;
            print(&pipeline::cmd_nearfield(&cfg, trace.as_deref(), oracle, &out)?)
        }
        Command::Diagnose {
            matrix,
            cone,
            cones,
            component,
            common,
        } => {
            let (cfg, out) = load_config(&common)?;
            let cone = match (cone, cones) {
                (Some(text), _) => parse_cone(&text)?,
                (None, Some(report)) => ConeSpec::from_report(&report, component.unwrap_or(0))?,
                (None, None) => return Err(Error::Malformed("give --cone or --cones".into())),
            };
            print(&pipeline::cmd_diagnose(Path::new(&matrix), &cone, component, &cfg, &out)?)
        }
        Command::RunAll(common) => {
            let (cfg, out) = load_config(&common)?;
            print(&pipeline::cmd_run_all(&cfg, &out)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; 2 is reserved for invariant violations
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvariantViolation(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
