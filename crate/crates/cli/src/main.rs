use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use homodyne_cli::commands::write_json;
use homodyne_cli::{cmd_compare_detectors, cmd_qnl, cmd_selftest, cmd_trace, CliError, CliResult, ScenarioConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "homodyne", version, about = "Spatial homodyne displacement/tilt simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides trace.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Photon number, quantum noise limits and minimum detectable values.
    Qnl(Common),
    /// Monte Carlo spectrum-analyzer traces (CSV) with a plot script.
    Trace(Common),
    /// Homodyne and split detector side by side.
    CompareDetectors(Common),
    /// Runs the invariant suites.
    Selftest,
}

fn load(common: &Common) -> CliResult<ScenarioConfig> {
    Ok(ScenarioConfig::load(&common.config)?.resolved(common.seed, common.out.as_deref()))
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>, name: String) -> CliResult<()> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
        write_json(&dir.join(name), report)?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Qnl(c) => {
            let cfg = load(&c)?;
            let report = cmd_qnl(&cfg)?;
            emit(&report, c.out.as_deref(), format!("{}_qnl.json", cfg.output.prefix))
        }
        Command::CompareDetectors(c) => {
            let cfg = load(&c)?;
            let report = cmd_compare_detectors(&cfg)?;
            emit(&report, c.out.as_deref(), format!("{}_compare.json", cfg.output.prefix))
        }
        Command::Trace(c) => {
            let cfg = load(&c)?;
            let report = cmd_trace(&cfg)?;
            for f in &report.files {
                println!(
                    "{:<40} mean {:>8.3} dB (expected {:>8.3} dB)",
                    f.file, f.mean_level_db, f.expected_level_db
                );
            }
            for e in &report.envelopes {
                println!(
                    "scan {} {:?}: tilt fraction {:.4}, max at {:.4} rad",
                    e.acquisition_index, e.curve, e.tilt_fraction, e.fit.phase
                );
            }
            println!("wrote {} and {}_trace.json to {}", report.plot_script, cfg.output.prefix, cfg.output.dir);
            Ok(())
        }
        Command::Selftest => {
            let report = cmd_selftest();
            print!("{}", report.render());
            report.into_result().map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
