use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fogsim_cli::{load_config, run_one, run_sweep, summarize, CliError, SweepPreset};
use fogsim_core::metrics::{report_csv_row, REPORT_CSV_HEADER};
use fogsim_core::regression::models_to_csv;
use fogsim_core::sim::{decisions_csv, telemetry_csv};
use fogsim_core::Policy;

#[derive(Parser)]
#[command(name = "fogsim", about = "Seeded fog placement simulations with regression-driven policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured (policy, seed) combination once.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to one policy (deadline_aware, energy_aware, hybrid, baseline_power_min).
        #[arg(long)]
        policy: Option<String>,
        /// Restrict to one seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the report and per-run telemetry/decision/model logs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a preset parameter sweep and write the report CSV.
    Sweep {
        /// `app` (70..=560 applications) or `device` (10..=50 devices).
        #[arg(long)]
        preset: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a sweep CSV into per-point policy means and improvements.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(e.to_string()))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn cmd_run(
    config: PathBuf,
    policy: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = load_config(&config)?;
    if let Some(name) = policy {
        let p = Policy::parse(&name)
            .ok_or_else(|| CliError::Run(format!("unknown policy `{name}`")))?;
        cfg.policies = vec![p];
    }
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }

    let mut report = String::from(REPORT_CSV_HEADER);
    report.push('\n');
    for &policy in &cfg.policies {
        for &seed in &cfg.seeds {
            let artifacts = run_one(&cfg, policy, seed)?;
            report.push_str(&report_csv_row(
                policy.name(),
                seed,
                cfg.n_devices,
                cfg.n_apps,
                &artifacts.report,
            ));
            report.push('\n');
            if let Some(dir) = &out {
                let tag = format!("{}_{}", policy.name(), seed);
                write_file(&dir.join(format!("telemetry_{tag}.csv")), &telemetry_csv(&artifacts))?;
                write_file(&dir.join(format!("decisions_{tag}.csv")), &decisions_csv(&artifacts))?;
                let models: Vec<_> = artifacts
                    .model_history
                    .iter()
                    .flat_map(|m| [m.exec_time.clone(), m.energy.clone()])
                    .collect();
                write_file(&dir.join(format!("models_{tag}.csv")), &models_to_csv(&models))?;
            }
        }
    }
    print!("{report}");
    if let Some(dir) = &out {
        write_file(&dir.join("report.csv"), &report)?;
    }
    Ok(())
}

fn cmd_sweep(preset: String, config: PathBuf, out: PathBuf) -> Result<(), CliError> {
    let cfg = load_config(&config)?;
    let preset = SweepPreset::parse(&preset)
        .ok_or_else(|| CliError::Run(format!("unknown preset `{preset}`; use app or device")))?;
    let csv = run_sweep(preset, &cfg)?;
    let name = match preset {
        SweepPreset::App => "sweep_app.csv",
        SweepPreset::Device => "sweep_device.csv",
    };
    let path = out.join(name);
    write_file(&path, &csv)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_summarize(input: PathBuf) -> Result<(), CliError> {
    let csv = std::fs::read_to_string(&input)
        .map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    print!("{}", summarize(&csv)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage problems are configuration problems.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config, policy, seed, out } => cmd_run(config, policy, seed, out),
        Command::Sweep { preset, config, out } => cmd_sweep(preset, config, out),
        Command::Summarize { input } => cmd_summarize(input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
