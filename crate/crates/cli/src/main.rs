use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stochconv_cli::config::SEED_ENV;
use stochconv_cli::pipeline::{run_stages, Stage, REPORT_FILE};
use stochconv_cli::{emit_plot_data, CliError, CliResult, ExperimentConfig, ExperimentReport, Preset};

/// Stochastic convolution experiments: kernel audits, simulation, moments and seminorms.
#[derive(Debug, Parser)]
#[command(name = "stochconv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel mass, closed-form and bound checks plus the integrability conditions.
    AuditKernel(Common),
    /// Simulate the field ensemble and save it to the output directory.
    Simulate(Common),
    /// Estimate pair moments from a saved ensemble and fit the lag exponent.
    Moments(Common),
    /// Campanato and Hölder seminorms.
    Seminorm(Common),
    /// Every stage of the preset.
    Run(Common),
    /// Regenerate plot tables from a saved report.
    EmitPlots {
        /// Report to read; defaults to report.json in the output directory.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset used when no config file is given.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Overrides the seed of the config file and of the environment.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> CliResult<(ExperimentConfig, PathBuf)> {
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| CliError::Config(format!("{SEED_ENV}={s}: {e}")))?,
            ),
            Err(_) => None,
        };
        let mut config = match (&self.config, self.preset) {
            (Some(path), _) => ExperimentConfig::from_path(path, env_seed)?,
            (None, Some(preset)) => {
                let mut c = ExperimentConfig::preset(preset);
                c.seed = env_seed.unwrap_or(0);
                c
            }
            (None, None) => return Err(CliError::Config("pass --config or --preset".into())),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        let out = self.out.clone().unwrap_or_else(|| config.output_dir.clone());
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
        }
        Ok((config, out))
    }
}

fn number(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.6e}")
    } else {
        format!("{v:.6}")
    }
}

fn summarize(report: &ExperimentReport) {
    for v in &report.verdicts {
        println!(
            "{} [{}] {}: predicted {}, fitted {}, tolerance {:.3e}",
            if v.pass { "PASS" } else { "FAIL" },
            v.stage,
            v.claim,
            number(v.predicted),
            number(v.fitted),
            v.tolerance
        );
    }
    let failed = report.failed().len();
    println!(
        "{}: {} verdicts, {} failed",
        report.config.experiment.name(),
        report.verdicts.len(),
        failed
    );
}

fn staged(common: &Common, stages: Option<&[Stage]>, report_file: &str) -> CliResult<ExperimentReport> {
    let (config, out) = common.load()?;
    let full = Stage::for_preset(config.experiment);
    let stages = stages.unwrap_or(&full);
    if stages == [Stage::Simulation] && !config.experiment.simulates() {
        return Err(CliError::Config(format!(
            "{} does not simulate a field",
            config.experiment.name()
        )));
    }
    let report = run_stages(&config, stages, Some(&out), report_file)?;
    summarize(&report);
    eprintln!("wrote {}", out.join(report_file).display());
    Ok(report)
}

fn execute(cli: Cli) -> CliResult<bool> {
    let report = match cli.command {
        Command::AuditKernel(c) => staged(&c, Some(&[Stage::Kernel, Stage::Conditions]), "audit-kernel.json")?,
        Command::Simulate(c) => staged(&c, Some(&[Stage::Simulation]), "simulate.json")?,
        Command::Moments(c) => staged(&c, Some(&[Stage::Moments, Stage::Oracle]), "moments.json")?,
        Command::Seminorm(c) => staged(&c, Some(&[Stage::Seminorm]), "seminorm.json")?,
        Command::Run(c) => staged(&c, None, REPORT_FILE)?,
        Command::EmitPlots { report, out } => {
            let path = match (&report, &out) {
                (Some(r), _) => r.clone(),
                (None, Some(o)) => o.join(REPORT_FILE),
                (None, None) => return Err(CliError::Config("pass --report or --out".into())),
            };
            let report = ExperimentReport::load(&path)?;
            let dir = out
                .unwrap_or_else(|| path.parent().map(PathBuf::from).unwrap_or_default())
                .join("plots");
            let bundle = emit_plot_data(&report);
            bundle.write_to(&dir)?;
            for (name, _) in &bundle.files {
                println!("{}", dir.join(name).display());
            }
            return Ok(true);
        }
    };
    Ok(report.pass)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
