use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinamp::experiments::{
    run_experiment, thread_pool, write_outputs, Experiment, RunConfig, RunError, RunOutput,
};

#[derive(Parser, Debug)]
#[command(name = "spinamp", version, about = "Spin-ensemble readout amplification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Collective-mode population for both qubit states, numeric and closed form
    Figure2(Args),
    /// Ensemble excitation totals and readout gain over a sweep of γ
    Figure3(Args),
    /// Per-γ summary of the readout gain
    Sweep(Args),
    /// Dressed-state spectrum against numerical diagonalization
    Spectrum(Args),
    /// Run every invariant check; exits 1 if any fails
    Validate(Args),
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct Args {}

#[derive(Parser, Debug)]
struct Common {
    /// JSON run configuration; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (CSV, or a JSON report for validate)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dot-path override, e.g. params.gamma_mhz=10
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let (experiment, common) = match parse() {
        Ok(v) => v,
        Err(e) => e.exit(),
    };
    match run(experiment, &common) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("spinamp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Subcommands share one flag set, so it is parsed once after the name.
fn parse() -> Result<(Experiment, Common), clap::Error> {
    let mut args: Vec<String> = std::env::args().collect();
    let sub_at = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|k| k + 1);
    let Some(k) = sub_at else {
        Cli::try_parse()?;
        unreachable!("clap reports a missing subcommand");
    };
    let sub = args.remove(k);
    let experiment = match sub.parse::<Experiment>() {
        Ok(e) => e,
        Err(_) => {
            Cli::try_parse()?;
            unreachable!("clap rejects unknown subcommands");
        }
    };
    let mut common_args = vec![format!("spinamp {sub}")];
    common_args.extend(args.into_iter().skip(1));
    Ok((experiment, Common::try_parse_from(common_args)?))
}

fn run(experiment: Experiment, common: &Common) -> Result<u8, RunError> {
    let cfg = match &common.config {
        Some(path) => RunConfig::load(path, &common.overrides)?,
        None => RunConfig::from_overrides(&common.overrides)?,
    };
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_path.clone());
    if out.is_none() && experiment != Experiment::Validate {
        return Err(RunError::Config("no output path: pass --out or set output_path".into()));
    }

    let pool = thread_pool()?;
    let (result, meta) = pool.install(|| run_experiment(&cfg, experiment))?;
    if let Some(path) = &out {
        write_outputs(&result, &meta, path)?;
    }

    match result {
        RunOutput::Table(t) => {
            eprintln!("{experiment}: {} rows", t.rows.len());
            Ok(0)
        }
        RunOutput::Report(r) => {
            for c in &r.checks {
                println!(
                    "{} {:<34} measured {:<12.4e} limit {:<10.3e} {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.tolerance,
                    c.detail
                );
            }
            Ok(if r.passed { 0 } else { 1 })
        }
    }
}
