use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ncdt_cli::commands::run;
use ncdt_cli::config::{read_config_file, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "ncdt",
    version,
    about = "Driven nonlinear two-mode coupler: sweeps and Floquet spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand)]
enum Sub {
    /// Propagate light launched into the first guide.
    Propagate,
    /// Localization against S/w and the width of its peak.
    SweepLocalization,
    /// Harmonic-balance and averaged quasienergies against S/w.
    Floquet,
    /// Averaged-model levels against S/w.
    Averaged,
    /// Convert laboratory parameters to model ratios (JSON).
    Physical,
    /// Print every setting with its default.
    Defaults,
}

/// Settings shared by all subcommands. Unset flags fall back to the
/// config file, then to the defaults.
#[derive(Args)]
struct Settings {
    /// key=value file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    w_over_v: Option<String>,
    /// A number or start:end:count.
    #[arg(long, global = true)]
    s_over_w: Option<String>,
    #[arg(long, global = true)]
    chi_over_v: Option<String>,
    #[arg(long, global = true)]
    defocusing: bool,
    /// Window length in units of 1/v.
    #[arg(long, global = true)]
    z_max: Option<String>,
    #[arg(long, global = true)]
    step_div: Option<String>,
    #[arg(long, global = true)]
    sample_every: Option<String>,
    #[arg(long, global = true)]
    threshold: Option<String>,
    #[arg(long, global = true)]
    cutoff: Option<String>,
    #[arg(long, global = true)]
    workers: Option<String>,
    /// Output file; stdout when absent or '-'.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    wavelength: Option<String>,
    #[arg(long, global = true)]
    n2: Option<String>,
    #[arg(long, global = true)]
    sigma_eff: Option<String>,
    #[arg(long, global = true)]
    power: Option<String>,
    #[arg(long, global = true)]
    bend_amplitude: Option<String>,
    #[arg(long, global = true)]
    bend_period: Option<String>,
    #[arg(long, global = true)]
    separation: Option<String>,
    #[arg(long, global = true)]
    substrate_index: Option<String>,
    #[arg(long, global = true)]
    transfer_length: Option<String>,
}

impl Settings {
    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("w-over-v", self.w_over_v.clone()),
            ("s-over-w", self.s_over_w.clone()),
            ("chi-over-v", self.chi_over_v.clone()),
            ("defocusing", self.defocusing.then(|| "true".to_string())),
            ("z-max", self.z_max.clone()),
            ("step-div", self.step_div.clone()),
            ("sample-every", self.sample_every.clone()),
            ("threshold", self.threshold.clone()),
            ("cutoff", self.cutoff.clone()),
            ("workers", self.workers.clone()),
            ("out", self.out.clone()),
            ("wavelength", self.wavelength.clone()),
            ("n2", self.n2.clone()),
            ("sigma-eff", self.sigma_eff.clone()),
            ("power", self.power.clone()),
            ("bend-amplitude", self.bend_amplitude.clone()),
            ("bend-period", self.bend_period.clone()),
            ("separation", self.separation.clone()),
            ("substrate-index", self.substrate_index.clone()),
            ("transfer-length", self.transfer_length.clone()),
        ]
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let command = match cli.command {
        Sub::Propagate => Command::Propagate,
        Sub::SweepLocalization => Command::SweepLocalization,
        Sub::Floquet => Command::Floquet,
        Sub::Averaged => Command::Averaged,
        Sub::Physical => Command::Physical,
        Sub::Defaults => Command::Defaults,
    };
    let mut values = match &cli.settings.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    for (key, value) in cli.settings.overrides() {
        if let Some(value) = value {
            values.insert(key.to_string(), value);
        }
    }
    RunConfig::resolve(command, &values)
}

fn execute(cli: &Cli) -> Result<usize> {
    let config = resolve(cli)?;
    let report = run(&config)?;
    match &config.out {
        Some(path) => std::fs::write(path, &report.text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().lock().write_all(report.text.as_bytes())?,
    }
    Ok(report.flagged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(flagged) => {
            eprintln!("ncdt: {flagged} row(s) flagged");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("ncdt: {e:#}");
            ExitCode::FAILURE
        }
    }
}
