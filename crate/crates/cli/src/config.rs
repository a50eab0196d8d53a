//! Run configuration: defaults, an optional `key = value` file, and command
//! line flags, applied in that order.

use crate::error::CliError;
use clap::ValueEnum;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Invariants,
    Scan,
    Minimize,
    StaticCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    fn parse(s: &str) -> Option<Self> {
        <Format as ValueEnum>::from_str(s, true).ok()
    }
}

/// Values that may come from either the config file or the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub t: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub steps: Option<usize>,
    pub l_max: Option<u32>,
    pub degree: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub with_minimizer: Option<bool>,
}

impl Overrides {
    /// Fields set in `other` replace those in `self`.
    pub fn layer(self, other: Overrides) -> Overrides {
        Overrides {
            k: other.k.or(self.k),
            l: other.l.or(self.l),
            t: other.t.or(self.t),
            t_min: other.t_min.or(self.t_min),
            t_max: other.t_max.or(self.t_max),
            steps: other.steps.or(self.steps),
            l_max: other.l_max.or(self.l_max),
            degree: other.degree.or(self.degree),
            restarts: other.restarts.or(self.restarts),
            seed: other.seed.or(self.seed),
            tol: other.tol.or(self.tol),
            out: other.out.or(self.out),
            format: other.format.or(self.format),
            with_minimizer: other.with_minimizer.or(self.with_minimizer),
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys are the flag
    /// names without dashes (`t-min` and `t_min` are both accepted).
    pub fn parse_file(text: &str) -> Result<Overrides, CliError> {
        let mut o = Overrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Usage(format!("config line {}: {msg}", lineno + 1));
            let (key, value) =
                line.split_once('=').ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim().replace('_', "-"), value.trim());
            fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
                v.parse().map_err(|_| format!("invalid value `{v}` for `{key}`"))
            }
            let parsed: Result<(), String> = (|| {
                match key.as_str() {
                    "k" => o.k = Some(num(&key, value)?),
                    "l" => o.l = Some(num(&key, value)?),
                    "t" => o.t = Some(num(&key, value)?),
                    "t-min" => o.t_min = Some(num(&key, value)?),
                    "t-max" => o.t_max = Some(num(&key, value)?),
                    "steps" => o.steps = Some(num(&key, value)?),
                    "lmax" | "l-max" => o.l_max = Some(num(&key, value)?),
                    "degree" => o.degree = Some(num(&key, value)?),
                    "restarts" => o.restarts = Some(num(&key, value)?),
                    "seed" => o.seed = Some(num(&key, value)?),
                    "tol" => o.tol = Some(num(&key, value)?),
                    "out" => o.out = Some(PathBuf::from(value)),
                    "format" => {
                        o.format = Some(Format::parse(value).ok_or_else(|| format!("unknown format `{value}`"))?)
                    }
                    "with-minimizer" => o.with_minimizer = Some(num(&key, value)?),
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            })();
            parsed.map_err(at)?;
        }
        Ok(o)
    }

    pub fn read_file(path: &Path) -> Result<Overrides, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_file(&text)
    }
}

pub const DEFAULT_LMAX: u32 = 6;
pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_T_MIN: f64 = 1.0;
pub const DEFAULT_T_MAX: f64 = 2.5;
pub const DEFAULT_STEPS: usize = 16;

/// Fully resolved configuration; serialized into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub k: usize,
    pub l: usize,
    pub t: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
    pub l_max: u32,
    pub degree: usize,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub with_minimizer: bool,
}

impl RunConfig {
    pub fn resolve(command: Command, o: Overrides) -> Result<RunConfig, CliError> {
        let l_max = o.l_max.unwrap_or(DEFAULT_LMAX);
        let format = o.format.unwrap_or(match command {
            Command::Scan => Format::Csv,
            _ => Format::Json,
        });
        let cfg = RunConfig {
            command,
            k: o.k.unwrap_or(2),
            l: o.l.unwrap_or(2),
            t: o.t,
            t_min: o.t_min.unwrap_or(DEFAULT_T_MIN),
            t_max: o.t_max.unwrap_or(DEFAULT_T_MAX),
            steps: o.steps.unwrap_or(DEFAULT_STEPS),
            l_max,
            degree: o.degree.unwrap_or(4 * l_max as usize),
            restarts: o.restarts.unwrap_or(DEFAULT_RESTARTS),
            seed: o.seed.unwrap_or(DEFAULT_SEED),
            tol: o.tol.unwrap_or(DEFAULT_TOL),
            out: o.out,
            format,
            with_minimizer: o.with_minimizer.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if let Some(t) = self.t {
            if !(t >= 1.0) || !t.is_finite() {
                return usage(format!("t must be ≥ 1, got {t}"));
            }
        }
        if self.command == Command::Scan {
            if !(self.t_min >= 1.0) {
                return usage(format!("t must be ≥ 1, got t-min {}", self.t_min));
            }
            let empty = self.steps == 0
                || !self.t_max.is_finite()
                || self.t_max < self.t_min
                || (self.steps > 1 && self.t_max == self.t_min);
            if empty {
                return usage(format!("empty t range [{}, {}] with {} steps", self.t_min, self.t_max, self.steps));
            }
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return usage(format!("tol must be positive, got {}", self.tol));
        }
        if self.k < 2 || self.l < 2 {
            return usage(format!("need k ≥ 2 and l ≥ 2, got k = {}, l = {}", self.k, self.l));
        }
        if self.l_max == 0 {
            return usage("lmax must be at least 1".into());
        }
        if self.restarts == 0 {
            return usage("restarts must be at least 1".into());
        }
        let allowed = match self.command {
            Command::Scan => &[Format::Csv, Format::Json, Format::Svg][..],
            Command::Invariants | Command::Minimize => &[Format::Json, Format::Csv][..],
            Command::StaticCheck => &[Format::Json][..],
        };
        if !allowed.contains(&self.format) {
            return usage(format!("format {:?} is not available for this command", self.format).to_lowercase());
        }
        Ok(())
    }

    /// `t` for single-family commands.
    pub fn require_t(&self) -> Result<f64, CliError> {
        self.t.ok_or_else(|| CliError::Usage("--t is required for this command".into()))
    }
}
