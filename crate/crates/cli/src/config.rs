//! Run configuration: TOML files, command-line overrides and the resolved [`RunSpec`].

use std::fmt;
use std::path::Path;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::CliError;

/// First line of every CSV header.
pub const MARKER: &str = "# bicm-config";
/// Environment variable supplying the seed when neither a flag nor the config sets one.
pub const SEED_ENV: &str = "BICM_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Capacity,
    Gmi,
    Exponent,
    Cutoff,
    Validate,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Capacity => "capacity",
            Command::Gmi => "gmi",
            Command::Exponent => "exponent",
            Command::Cutoff => "cutoff",
            Command::Validate => "validate",
        })
    }
}

/// Settings that may come from a config file or from flags. Flags win.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[arg(skip)]
    pub command: Option<Command>,
    /// bpsk, qpsk, pskM, qamM or file:PATH
    #[arg(long)]
    pub constellation: Option<String>,
    /// brgc (alias gray) or natural
    #[arg(long)]
    pub labeling: Option<String>,
    /// awgn or rayleigh
    #[arg(long)]
    pub channel: Option<String>,
    /// SNR in dB: a value, a list or start:step:stop
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: Option<Grid>,
    /// Measures, metrics or exponent families, comma separated
    #[arg(long, value_delimiter = ',', visible_aliases = ["measures", "families", "metric"])]
    pub metrics: Option<Vec<String>>,
    /// Extrinsic model for ext-tx/ext-hyp: none, perfect, gaussian:SIGMA[/SIGMA...]
    #[arg(long)]
    pub extrinsic: Option<String>,
    /// Fixed GMI scale parameter instead of optimizing it
    #[arg(long)]
    pub s: Option<f64>,
    /// Rates in bits per channel use: a list or start:step:stop
    #[arg(long)]
    pub rates: Option<Grid>,
    /// Block length of the simulated code
    #[arg(long = "block-length", visible_alias = "N")]
    pub block_length: Option<usize>,
    /// Rate of the simulated code in bits per channel use
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// monte_carlo (mc) or gauss_hermite (gh)
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Gauss-Hermite nodes per noise axis
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! prefer {
    ($flags:ident, $file:ident; $($field:ident),*) => {
        Overrides { $($field: $flags.$field.or($file.$field)),* }
    };
}

impl Overrides {
    /// Field-wise `self` over `file`.
    pub fn over(self, file: Overrides) -> Overrides {
        let flags = self;
        prefer!(flags, file; command, constellation, labeling, channel, snr_db, metrics, extrinsic, s,
            rates, block_length, rate, trials, backend, samples, nodes, seed)
    }
}

/// Fully resolved, canonical description of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub command: Command,
    pub constellation: String,
    pub labeling: String,
    pub channel: String,
    pub snr_db: Vec<f64>,
    pub metrics: Vec<String>,
    pub extrinsic: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub backend: String,
    pub samples: usize,
    pub nodes: usize,
    pub seed: u64,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn default_metrics(command: Command) -> Vec<String> {
    let names: &[&str] = match command {
        Command::Capacity => &["cm", "bicm"],
        Command::Gmi => &["sum", "maxlog"],
        Command::Exponent => &["cm", "ind", "sum", "maxlog"],
        Command::Cutoff => &["sum"],
        Command::Validate => &["matched"],
    };
    names.iter().map(|s| s.to_string()).collect()
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

impl RunSpec {
    /// Fills defaults, canonicalizes names and validates every field `command` uses.
    ///
    /// Fields the command does not use are dropped.
    pub fn resolve(command: Command, o: Overrides) -> Result<RunSpec, CliError> {
        if let Some(c) = o.command {
            if c != command {
                return Err(usage(format!("config is for `{c}`, not `{command}`")));
            }
        }
        let constellation = canonical_constellation(o.constellation.as_deref().unwrap_or("qam16"));
        let labeling = match o.labeling.as_deref().unwrap_or("brgc") {
            _ if constellation.starts_with("file:") => "file".to_string(),
            "brgc" | "gray" => "brgc".to_string(),
            "natural" => "natural".to_string(),
            other => return Err(usage(format!("unknown labeling {other:?}"))),
        };
        let channel = o.channel.unwrap_or_else(|| "awgn".into()).to_lowercase();
        let snr_db = o.snr_db.ok_or_else(|| usage("--snr-db is required"))?.0;
        let metrics = o.metrics.filter(|m| !m.is_empty()).unwrap_or_else(|| default_metrics(command));
        let metrics: Vec<String> = metrics.iter().map(|m| m.trim().to_string()).collect();
        let backend = match o.backend.as_deref().unwrap_or("monte_carlo") {
            "monte_carlo" | "mc" => "monte_carlo".to_string(),
            "gauss_hermite" | "gh" => "gauss_hermite".to_string(),
            other => return Err(usage(format!("unknown backend {other:?}"))),
        };
        let seed = match o.seed {
            Some(seed) => seed,
            None => env_seed()?.unwrap_or(DEFAULT_SEED),
        };
        let mut spec = RunSpec {
            command,
            constellation,
            labeling,
            channel,
            snr_db,
            metrics,
            extrinsic: o.extrinsic.unwrap_or_else(|| "none".into()),
            s: None,
            rates: Vec::new(),
            block_length: None,
            rate: None,
            trials: None,
            backend,
            samples: o.samples.unwrap_or(bicm::numerics::DEFAULT_SAMPLES),
            nodes: o.nodes.unwrap_or(bicm::numerics::DEFAULT_NODES),
            seed,
        };
        match command {
            Command::Gmi => spec.s = o.s,
            Command::Exponent => spec.rates = o.rates.ok_or_else(|| usage("exponent needs --rates"))?.0,
            Command::Validate => {
                spec.block_length = Some(o.block_length.ok_or_else(|| usage("validate needs --N"))?);
                spec.rate = Some(o.rate.ok_or_else(|| usage("validate needs --rate"))?);
                spec.trials = Some(o.trials.unwrap_or(DEFAULT_TRIALS));
            }
            Command::Capacity | Command::Cutoff => {}
        }
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(usage("snr_db must be finite"));
        }
        if self.metrics.is_empty() {
            return Err(usage("at least one metric is required"));
        }
        if self.rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(usage("rates must be finite and nonnegative"));
        }
        if self.rates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(usage("rate grid must be strictly increasing"));
        }
        if let Some(s) = self.s {
            if !(s > 0.0 && s.is_finite()) {
                return Err(usage("s must be positive"));
            }
        }
        if self.command == Command::Validate && self.metrics.len() != 1 {
            return Err(usage("validate takes exactly one metric"));
        }
        // Building the objects checks every name.
        crate::run::Plan::build(self)?;
        Ok(())
    }

    /// The spec as TOML, one key per line.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run spec serializes")
    }

    /// `#`-prefixed header that [`load_config`] reads back into this spec.
    pub fn header(&self) -> String {
        let mut out = format!("{MARKER} {}\n", env!("CARGO_PKG_VERSION"));
        for line in self.to_toml().lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

fn canonical_constellation(name: &str) -> String {
    let name = name.trim();
    if name.starts_with("file:") {
        name.to_string()
    } else {
        name.to_lowercase()
    }
}

/// Parses config text: either plain TOML or a CSV whose header was written by this tool.
pub fn parse_config(text: &str) -> Result<Overrides, CliError> {
    let (body, first_line) = if text.starts_with(MARKER) {
        let body: Vec<&str> = text
            .lines()
            .skip(1)
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.strip_prefix("# ").unwrap_or(l.trim_start_matches('#')))
            .collect();
        (body.join("\n"), 2)
    } else {
        (text.to_string(), 1)
    };
    toml::from_str(&body).map_err(|e| {
        let line = e.span().map_or(0, |span| body[..span.start].matches('\n').count()) + first_line;
        CliError::Config { line, message: e.message().to_string() }
    })
}

pub fn load_config(path: &Path) -> Result<Overrides, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
