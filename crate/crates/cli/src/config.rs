//! Flags, the optional TOML config file, and their merge.
//!
//! Precedence: built-in defaults < config file < flags.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::CliError;
use crate::output::Format;

/// Cap on the number of values an `--n`/`--k` list may expand to.
pub const MAX_LIST_LEN: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "polyproj", version, about = "Lower bounds on projections onto quadratic polynomials: tables, certification checks and a discrete oracle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound table for one degree over a range of dimensions.
    Bound(CommonArgs),
    /// Bound tables for a range of degrees, checked against the quadratic bound.
    Table(CommonArgs),
    /// Sampled checks of the witness functions.
    WitnessCheck(WitnessArgs),
    /// Monte-Carlo rotation averages against their closed forms.
    AverageCheck(CommonArgs),
    /// Minimal-projection search on finite nets across resolutions.
    Oracle(OracleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bound(_) => "bound",
            Command::Table(_) => "table",
            Command::WitnessCheck(_) => "witness-check",
            Command::AverageCheck(_) => "average-check",
            Command::Oracle(_) => "oracle",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Bound(c) | Command::Table(c) | Command::AverageCheck(c) => c,
            Command::WitnessCheck(w) => &w.common,
            Command::Oracle(o) => &o.common,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Dimension, or a list/range such as `3..100` (inclusive) or `3,5,8`.
    #[arg(long)]
    pub n: Option<String>,
    /// Degree, or a list/range for `table`.
    #[arg(long)]
    pub k: Option<String>,
    /// A number or `auto`.
    #[arg(long)]
    pub eps: Option<String>,
    /// A number or `auto`.
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample count (meaning depends on the command).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML file with any of the above keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Replace the angle profile by a steeper one that breaks its slope bound.
    #[arg(long)]
    pub corrupt_tau: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Grid,
    Shells,
    Random,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Net resolutions, e.g. `4,8,16`.
    #[arg(long)]
    pub resolutions: Option<String>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    /// Add a wall-time column (makes the output time dependent).
    #[arg(long)]
    pub timing: bool,
    /// Also write the best projection of each resolution as JSON here.
    #[arg(long)]
    pub projections: Option<PathBuf>,
}

/// A config value that may be written as a number, string or list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Text(String),
    List(Vec<i64>),
}

impl Scalar {
    fn render(&self) -> String {
        match self {
            Scalar::Int(v) => v.to_string(),
            Scalar::Float(v) => format!("{v:?}"),
            Scalar::Text(s) => s.clone(),
            Scalar::List(v) => v.iter().map(i64::to_string).collect::<Vec<_>>().join(","),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub n: Option<Scalar>,
    pub k: Option<Scalar>,
    pub eps: Option<Scalar>,
    pub delta: Option<Scalar>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub resolutions: Option<Scalar>,
    pub restarts: Option<usize>,
    pub scheme: Option<Scheme>,
    pub timing: Option<bool>,
    pub corrupt_tau: Option<bool>,
    pub projections: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Every setting after merging flags over the config file.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub n: Option<String>,
    pub k: Option<String>,
    pub eps: Option<String>,
    pub delta: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub resolutions: Option<String>,
    pub restarts: Option<usize>,
    pub scheme: Option<Scheme>,
    pub timing: bool,
    pub corrupt_tau: bool,
    pub projections: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(command: &Command) -> Result<Self, CliError> {
        let c = command.common();
        let file = match &c.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        if let Some(name) = &file.command {
            if name != command.name() {
                return Err(CliError::Usage(format!(
                    "config is for command `{name}`, not `{}`",
                    command.name()
                )));
            }
        }
        let pick = |flag: &Option<String>, cfg: &Option<Scalar>| flag.clone().or_else(|| cfg.as_ref().map(Scalar::render));
        let mut s = Settings {
            n: pick(&c.n, &file.n),
            k: pick(&c.k, &file.k),
            eps: pick(&c.eps, &file.eps),
            delta: pick(&c.delta, &file.delta),
            seed: c.seed.or(file.seed),
            samples: c.samples.or(file.samples),
            out: c.out.clone().or(file.out),
            format: c.format.or(file.format),
            resolutions: file.resolutions.as_ref().map(Scalar::render),
            restarts: file.restarts,
            scheme: file.scheme,
            timing: file.timing.unwrap_or(false),
            corrupt_tau: file.corrupt_tau.unwrap_or(false),
            projections: file.projections,
        };
        match command {
            Command::WitnessCheck(w) => s.corrupt_tau |= w.corrupt_tau,
            Command::Oracle(o) => {
                s.resolutions = o.resolutions.clone().or(s.resolutions);
                s.restarts = o.restarts.or(s.restarts);
                s.scheme = o.scheme.or(s.scheme);
                s.timing |= o.timing;
                s.projections = o.projections.clone().or(s.projections);
            }
            _ => {}
        }
        Ok(s)
    }
}

/// Expands `a..b` / `a..=b` (both inclusive), single values and
/// comma-separated mixtures of the two.
pub fn parse_list(what: &str, text: &str) -> Result<Vec<usize>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("--{what} `{text}`: {why}"));
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("expected non-negative integers"));
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(bad("empty entry"));
        }
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (int(a)?, int(b.strip_prefix('=').unwrap_or(b))?);
            if a > b {
                return Err(bad("empty range"));
            }
            if out.len() + (b - a) >= MAX_LIST_LEN {
                return Err(bad("too many values"));
            }
            out.extend(a..=b);
        } else {
            out.push(int(part)?);
        }
    }
    Ok(out)
}

/// `None` for `auto`, else the number.
pub fn parse_auto(what: &str, text: &str) -> Result<Option<f64>, CliError> {
    if text.trim().eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("--{what} `{text}`: expected a number or `auto`")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!("--{what} must be finite")));
    }
    Ok(Some(v))
}

/// A single integer setting.
pub fn parse_single(what: &str, text: &str) -> Result<usize, CliError> {
    match parse_list(what, text)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(CliError::Usage(format!("--{what} `{text}`: expected a single value"))),
    }
}
