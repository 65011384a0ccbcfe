//! Run configuration: defaults, `key=value` files and flag overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ncdt_core::model::PhysicalParams;
use ncdt_core::{ModelParams, Nonlinearity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Propagate,
    SweepLocalization,
    Floquet,
    Averaged,
    Physical,
    Defaults,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Propagate => "propagate",
            Command::SweepLocalization => "sweep-localization",
            Command::Floquet => "floquet",
            Command::Averaged => "averaged",
            Command::Physical => "physical",
            Command::Defaults => "defaults",
        }
    }

    fn default_grid(self) -> &'static str {
        match self {
            Command::Propagate => "2.2",
            Command::Floquet => "0:3:61",
            _ => "1.5:3:301",
        }
    }
}

/// `S/w` values: a single point or `count` equispaced points on
/// `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Grid {
    Point(f64),
    Range { start: f64, end: f64, count: usize },
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let number = |s: &str| -> Result<f64> {
            let x: f64 = s
                .parse()
                .with_context(|| format!("bad number {s:?} in grid {text:?}"))?;
            if !x.is_finite() || x < 0.0 {
                bail!("grid value {x} must be finite and non-negative");
            }
            Ok(x)
        };
        match parts.as_slice() {
            [x] => Ok(Grid::Point(number(x)?)),
            [a, b, n] => {
                let (start, end) = (number(a)?, number(b)?);
                let count: usize = n.parse().with_context(|| format!("bad count {n:?}"))?;
                if count == 0 {
                    bail!("grid {text:?} is empty");
                }
                if count > 1 && end <= start {
                    bail!("grid {text:?} must be increasing");
                }
                Ok(Grid::Range { start, end, count })
            }
            _ => bail!("grid {text:?} must be a number or start:end:count"),
        }
    }

    pub fn points(&self) -> Vec<f64> {
        match *self {
            Grid::Point(x) => vec![x],
            Grid::Range {
                start, count: 1, ..
            } => vec![start],
            Grid::Range { start, end, count } => (0..count)
                .map(|k| start + (end - start) * k as f64 / (count - 1) as f64)
                .collect(),
        }
    }

    /// Spacing between neighbouring points; zero for a single point.
    pub fn spacing(&self) -> f64 {
        match *self {
            Grid::Range { start, end, count } if count > 1 => (end - start) / (count - 1) as f64,
            _ => 0.0,
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            Grid::Point(x) => x,
            Grid::Range { start, end, count } => {
                if count > 1 {
                    end
                } else {
                    start
                }
            }
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Point(x) => write!(f, "{x}"),
            Grid::Range { start, end, count } => write!(f, "{start}:{end}:{count}"),
        }
    }
}

/// Every recognised key with its default and a one-line description.
/// `s-over-w` defaults depend on the command and are listed separately.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("w-over-v", "10", "driving frequency over coupling"),
    (
        "s-over-w",
        "",
        "drive ratio S/w: a number or start:end:count",
    ),
    ("chi-over-v", "0.4", "nonlinear coefficient over coupling"),
    ("defocusing", "false", "flip the sign of the nonlinearity"),
    ("z-max", "200", "propagation window in units of 1/v"),
    ("step-div", "400", "Runge-Kutta step divisor"),
    (
        "sample-every",
        "0",
        "propagate: write every k-th step (0 = about 2000 rows)",
    ),
    (
        "threshold",
        "0.5",
        "localization threshold for the peak width",
    ),
    (
        "cutoff",
        "0",
        "harmonic cutoff M (0 = 12 for w/v >= 10, 32 for w/v >= 3, else 64)",
    ),
    ("workers", "0", "worker threads (0 = available parallelism)"),
    ("out", "-", "output file ('-' = stdout)"),
    (
        "wavelength",
        "1.55e-6",
        "physical: free-space wavelength (m)",
    ),
    ("n2", "1.2e-17", "physical: nonlinear index (m^2/W)"),
    (
        "sigma-eff",
        "12e-12",
        "physical: effective cross-section (m^2)",
    ),
    ("power", "100", "physical: input power (W)"),
    ("bend-amplitude", "10e-6", "physical: bend amplitude (m)"),
    ("bend-period", "1e-2", "physical: bend period (m)"),
    ("separation", "15e-6", "physical: waveguide separation (m)"),
    (
        "substrate-index",
        "1.5",
        "physical: substrate refractive index",
    ),
    (
        "transfer-length",
        "2e-2",
        "physical: linear transfer length (m)",
    ),
];

/// Fully resolved settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub w_over_v: f64,
    pub grid: Grid,
    pub chi_over_v: f64,
    pub nonlinearity: Nonlinearity,
    pub z_max: f64,
    pub step_divisor: f64,
    pub sample_every: usize,
    pub threshold: f64,
    pub cutoff: Option<usize>,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub physical: PhysicalParams,
}

/// Reads a `key=value` file. Blank lines and `#` comments are skipped.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value", number + 1))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            bail!("line {}: unknown key {key:?}", number + 1);
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn lookup<'a>(values: &'a BTreeMap<String, String>, key: &str, command: Command) -> &'a str {
    if let Some(v) = values.get(key) {
        return v;
    }
    if key == "s-over-w" {
        return command.default_grid();
    }
    KEYS.iter()
        .find(|(k, _, _)| *k == key)
        .map(|(_, d, _)| *d)
        .expect("known key")
}

fn real(values: &BTreeMap<String, String>, key: &str, command: Command) -> Result<f64> {
    let text = lookup(values, key, command);
    let x: f64 = text
        .parse()
        .with_context(|| format!("{key}: cannot parse {text:?} as a number"))?;
    if !x.is_finite() {
        bail!("{key}: must be finite");
    }
    Ok(x)
}

fn count(values: &BTreeMap<String, String>, key: &str, command: Command) -> Result<usize> {
    let text = lookup(values, key, command);
    text.parse()
        .with_context(|| format!("{key}: cannot parse {text:?} as a count"))
}

impl RunConfig {
    /// Resolves `values` (config file entries already overridden by flags)
    /// against the defaults.
    pub fn resolve(command: Command, values: &BTreeMap<String, String>) -> Result<Self> {
        for key in values.keys() {
            if !KEYS.iter().any(|(k, _, _)| k == key) {
                bail!("unknown setting {key:?}");
            }
        }
        let defocusing = match lookup(values, "defocusing", command) {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => bail!("defocusing: expected true or false, got {other:?}"),
        };
        let workers = match count(values, "workers", command)? {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        };
        let cutoff = match count(values, "cutoff", command)? {
            0 => None,
            m => Some(m),
        };
        let out = match lookup(values, "out", command) {
            "-" | "" => None,
            path => Some(PathBuf::from(path)),
        };
        let config = Self {
            command,
            w_over_v: real(values, "w-over-v", command)?,
            grid: Grid::parse(lookup(values, "s-over-w", command))?,
            chi_over_v: real(values, "chi-over-v", command)?,
            nonlinearity: if defocusing {
                Nonlinearity::Defocusing
            } else {
                Nonlinearity::Focusing
            },
            z_max: real(values, "z-max", command)?,
            step_divisor: real(values, "step-div", command)?,
            sample_every: count(values, "sample-every", command)?,
            threshold: real(values, "threshold", command)?,
            cutoff,
            workers,
            out,
            physical: PhysicalParams {
                wavelength: real(values, "wavelength", command)?,
                n2: real(values, "n2", command)?,
                sigma_eff: real(values, "sigma-eff", command)?,
                power: real(values, "power", command)?,
                bend_amplitude: real(values, "bend-amplitude", command)?,
                bend_period: real(values, "bend-period", command)?,
                separation: real(values, "separation", command)?,
                substrate_index: real(values, "substrate-index", command)?,
                transfer_length: real(values, "transfer-length", command)?,
            },
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.z_max < 0.0 {
            bail!("z-max must be non-negative");
        }
        if self.step_divisor <= 0.0 {
            bail!("step-div must be positive");
        }
        if self.command == Command::Propagate && !matches!(self.grid, Grid::Point(_)) {
            bail!("propagate takes a single s-over-w value");
        }
        // Model parameters are checked by the core constructors.
        self.base_params()?;
        Ok(())
    }

    /// Model parameters with `v = 1` and `S/w = 0`.
    pub fn base_params(&self) -> Result<ModelParams> {
        ModelParams::from_ratios(self.w_over_v, 0.0, self.chi_over_v, self.nonlinearity)
            .map_err(|e| anyhow!("{e}"))
    }

    /// `key=value` lines echoing every setting, in key order.
    pub fn echo(&self) -> Vec<String> {
        let p = &self.physical;
        let cutoff = self.cutoff.unwrap_or(0);
        let out = self
            .out
            .as_ref()
            .map_or_else(|| "-".to_string(), |p| p.display().to_string());
        let mut lines = vec![
            format!("w-over-v={}", self.w_over_v),
            format!("s-over-w={}", self.grid),
            format!("chi-over-v={}", self.chi_over_v),
            format!(
                "defocusing={}",
                self.nonlinearity == Nonlinearity::Defocusing
            ),
            format!("z-max={}", self.z_max),
            format!("step-div={}", self.step_divisor),
            format!("sample-every={}", self.sample_every),
            format!("threshold={}", self.threshold),
            format!("cutoff={cutoff}"),
            format!("out={out}"),
        ];
        if self.command == Command::Physical {
            lines.extend([
                format!("wavelength={}", p.wavelength),
                format!("n2={}", p.n2),
                format!("sigma-eff={}", p.sigma_eff),
                format!("power={}", p.power),
                format!("bend-amplitude={}", p.bend_amplitude),
                format!("bend-period={}", p.bend_period),
                format!("separation={}", p.separation),
                format!("substrate-index={}", p.substrate_index),
                format!("transfer-length={}", p.transfer_length),
            ]);
        }
        lines
    }
}

/// Text printed by the `defaults` command.
pub fn defaults_listing() -> String {
    let mut out = String::new();
    for (key, default, description) in KEYS {
        if *key == "s-over-w" {
            for command in [
                Command::Propagate,
                Command::SweepLocalization,
                Command::Floquet,
                Command::Averaged,
            ] {
                out.push_str(&format!(
                    "s-over-w={}  # {description} ({})\n",
                    command.default_grid(),
                    command.name()
                ));
            }
        } else {
            out.push_str(&format!("{key}={default}  # {description}\n"));
        }
    }
    out
}
