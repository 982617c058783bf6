//! Command-line front end: `analyze`, `certify`, `table` and `selftest`.
//!
//! Exit codes: 0 ok, 1 selftest failure, 2 usage or parse error,
//! 3 capacity exceeded, 4 closed-form claim not reproduced.

mod analyze;
mod certify;
pub mod doc;
mod selftest;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use identcert_core::geometry::{GeometryError, VarietySpec};
use identcert_core::inference::{InferenceError, KnowledgeBase, Mode, DEFAULT_H_WINDOW};
use identcert_core::secantprobe::{ProbeError, DEFAULT_CAP};

pub use table::TABLE_NAMES;

pub mod exit {
    pub const OK: i32 = 0;
    pub const SELFTEST_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CAPACITY: i32 = 3;
    pub const DISAGREEMENT: i32 = 4;
}

/// Environment variable overriding the default seed.
pub const SEED_ENV: &str = "IDENTCERT_SEED";

#[derive(Debug, Parser)]
#[command(name = "identcert", version, about = "Certify generic identifiability of classical varieties")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// independent random trials per probe
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// matrix-entry cap per probe
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: u64,
    /// write the JSON document here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Prime,
    Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PromoteArg {
    Never,
    RationalConfirm,
    Always,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Secant dimensions and not-twd probes for h = 1..=h-max.
    Analyze {
        /// e.g. segre:1,1,1  veronese:d=2,n=2  sv:d=1,2;n=1,3  grass:k=1,n=4  gm:d=14
        #[arg(long)]
        spec: String,
        /// defaults to the generic rank
        #[arg(long)]
        h_max: Option<u64>,
        #[arg(long, value_enum, default_value = "prime")]
        field: FieldArg,
        #[arg(long)]
        modulus: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Certified identifiability range with certificates.
    Certify {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value = "hybrid")]
        mode: Mode,
        /// probe only h <= this value
        #[arg(long)]
        h: Option<u64>,
        #[arg(long, value_enum, default_value = "never")]
        promote: PromoteArg,
        /// instantiate facts for h <= min(gr + 1, window)
        #[arg(long, default_value_t = DEFAULT_H_WINDOW)]
        window: u64,
        #[arg(long)]
        modulus: Option<u64>,
        /// knowledge-base JSON replacing the shipped one
        #[arg(long)]
        kb: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form bounds over a parameter grid, certified where feasible.
    Table {
        /// one of the names in TABLE_NAMES
        name: String,
        #[command(flatten)]
        grid: table::Grid,
        /// also write a TSV summary here
        #[arg(long)]
        tsv: Option<PathBuf>,
        /// rows with h_limit * (n+1) * (N+1) above this run catalog-only
        #[arg(long, default_value_t = 1 << 16)]
        desk_cap: u64,
        #[arg(long, default_value_t = DEFAULT_H_WINDOW)]
        window: u64,
        #[arg(long)]
        kb: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Reduced-size oracle and fixture checks.
    Selftest {
        #[arg(long)]
        kb: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// An exit code with its message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: exit::USAGE, message: message.into() }
    }
}

fn geometry_code(e: &GeometryError) -> i32 {
    match e {
        GeometryError::TooLarge(_) | GeometryError::Overflow(_) => exit::CAPACITY,
        _ => exit::USAGE,
    }
}

fn probe_code(e: &ProbeError) -> i32 {
    match e {
        ProbeError::Capacity { .. } => exit::CAPACITY,
        ProbeError::InvalidArgument(_) => exit::USAGE,
        ProbeError::Geometry(g) => geometry_code(g),
        _ => 1,
    }
}

impl From<ProbeError> for Failure {
    fn from(e: ProbeError) -> Self {
        Self { code: probe_code(&e), message: e.to_string() }
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        Self { code: geometry_code(&e), message: e.to_string() }
    }
}

impl From<InferenceError> for Failure {
    fn from(e: InferenceError) -> Self {
        let code = match &e {
            InferenceError::Probe(p) => probe_code(p),
            InferenceError::Geometry(g) => geometry_code(g),
            InferenceError::KnowledgeBase(_) | InferenceError::InvalidFact(_) => exit::USAGE,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

pub(crate) fn parse_spec(s: &str) -> Result<VarietySpec, Failure> {
    let spec: VarietySpec = s.parse()?;
    spec.validate()?;
    Ok(spec)
}

pub(crate) fn check_common(c: &Common) -> Result<(), Failure> {
    if c.trials == 0 {
        return Err(Failure::usage("--trials must be >= 1"));
    }
    if c.cap == 0 {
        return Err(Failure::usage("--cap must be positive"));
    }
    Ok(())
}

pub(crate) fn load_kb(path: Option<&Path>) -> Result<Option<KnowledgeBase>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let src = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    KnowledgeBase::from_json(&src).map(Some).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Writes `text` to `path`, or to `out` when there is no path.
pub(crate) fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure { code: 1, message: e.to_string() }),
    }
}

/// Runs one command; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return if code == 0 { exit::OK } else { exit::USAGE };
        }
    };
    let result = match cli.command {
        Command::Analyze { spec, h_max, field, modulus, common } => {
            analyze::run(&spec, h_max, field, modulus, &common, out)
        }
        Command::Certify { spec, mode, h, promote, window, modulus, kb, common } => {
            let args = certify::CertifyArgs { spec, mode, h, promote, window, modulus, kb, common };
            certify::run(&args, out)
        }
        Command::Table { name, grid, tsv, desk_cap, window, kb, common } => {
            let args = table::TableArgs { name, grid, tsv, desk_cap, window, kb, common };
            table::run(&args, out)
        }
        Command::Selftest { kb, common } => selftest::run(kb.as_deref(), &common, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
