use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_value, set_path, ExperimentConfig, ExperimentKind, MeasureSpec, ModelSpec};
use crate::error::{CliError, EXIT_PASS, EXIT_USAGE, EXIT_VALIDATION};
use crate::executor::{default_workers, RayonExecutor};
use crate::experiments::run_experiment;
use crate::output::{fmt_f64, write_outcome};
use crate::report::ValidationReport;
use crate::sweep::{expand, run_sweep};

#[derive(Debug, Parser)]
#[command(name = "timechange", version, about = "Validation runs for time changes by inverse killed subordinators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Experiment configuration (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override the configured seed
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads [default: available cores]
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Override the output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Accept finite-activity Levy measures in the estimators
    #[arg(long, global = true)]
    pub override_finite_activity: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Run one experiment and write its report
    Run,
    /// Run the Cartesian product of the [sweep] table
    Sweep,
    /// List Levy families, models, test functions and experiment kinds
    ListFamilies,
    /// Check a configuration and print it with every default filled in
    ValidateConfig,
}

/// Parses `args` and runs the command, returning the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// The configuration file with command-line overrides applied.
pub fn load_template(common: &CommonArgs) -> Result<toml::Value, CliError> {
    let path = common.config.as_ref().ok_or_else(|| CliError::usage("--config PATH is required"))?;
    let mut value = load_value(path)?;
    if let Some(seed) = common.seed {
        let seed = i64::try_from(seed).map_err(|_| CliError::field("--seed", "must be below 2^63"))?;
        set_path(&mut value, "seed", toml::Value::Integer(seed))?;
    }
    if let Some(out) = &common.out {
        set_path(&mut value, "out", toml::Value::String(out.to_string_lossy().into_owned()))?;
    }
    if common.override_finite_activity {
        set_path(&mut value, "numerics.allow_finite_activity", toml::Value::Boolean(true))?;
    }
    Ok(value)
}

fn executor(common: &CommonArgs) -> Result<RayonExecutor, CliError> {
    RayonExecutor::new(common.workers.unwrap_or_else(default_workers))
}

fn status(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_report(report: &ValidationReport) {
    for r in &report.records {
        println!(
            "{}  {}: computed {} oracle {} tolerance {}",
            status(r.passed),
            r.name,
            fmt_f64(r.computed),
            fmt_f64(r.oracle),
            fmt_f64(r.tolerance)
        );
    }
}

pub fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::ListFamilies => {
            println!("Levy measure families (bernstein.measure.family):");
            for (name, params) in MeasureSpec::FAMILIES {
                println!("  {name:<18} {params}");
            }
            println!("Models (model.kind):");
            for (name, about) in ModelSpec::KINDS {
                println!("  {name:<18} {about}");
            }
            println!("Test functions (function.kind):");
            for (name, about) in [
                ("constant", "value"),
                ("sine", "sin(mode x)"),
                ("cosine", "cos(mode x)"),
                ("gaussian", "exp(-x^2 / (2 width^2)); not periodic"),
            ] {
                println!("  {name:<18} {about}");
            }
            println!("Experiments (kind):");
            for k in ExperimentKind::ALL {
                println!("  {:<18} {}", k.name(), k.description());
            }
            Ok(EXIT_PASS)
        }
        Command::ValidateConfig => {
            let value = load_template(&cli.common)?;
            let cfg = ExperimentConfig::from_value(value.clone())?;
            print!("{}", cfg.to_toml()?);
            if !cfg.sweep.is_empty() {
                let (_, cells) = expand(&value)?;
                eprintln!("sweep: {} cells", cells.len());
            }
            Ok(EXIT_PASS)
        }
        Command::Run => {
            let cfg = ExperimentConfig::from_value(load_template(&cli.common)?)?;
            if !cfg.sweep.is_empty() {
                return Err(CliError::field(
                    "sweep",
                    "use the sweep subcommand for configurations with a [sweep] table",
                ));
            }
            let exec = executor(&cli.common)?;
            let outcome = run_experiment(&cfg, &exec)?;
            write_outcome(&cfg.out, &cfg, &outcome)?;
            print_report(&outcome.report);
            println!("{} {} -> {}", status(outcome.report.passed), cfg.kind.name(), cfg.out.display());
            Ok(if outcome.report.passed { EXIT_PASS } else { EXIT_VALIDATION })
        }
        Command::Sweep => {
            let template = load_template(&cli.common)?;
            let exec = executor(&cli.common)?;
            let sweep = run_sweep(&template, &exec)?;
            for (cell, report) in &sweep.reports {
                let labels: Vec<String> = cell.assignments.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                println!("{} cell {:03}  {}", status(report.passed), cell.index, labels.join(", "));
            }
            println!("{} sweep -> {}", status(sweep.passed), sweep.summary.display());
            Ok(if sweep.passed { EXIT_PASS } else { EXIT_VALIDATION })
        }
    }
}
