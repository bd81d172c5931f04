//! Experiment plumbing behind the `ffdist` binary: configuration, set generation, the
//! subcommands, threshold scans, and CSV/JSON emission.

mod commands;
mod scan;
pub mod sets;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::Value;
use thiserror::Error;

use crate::distances::DistanceError;
use crate::field::{is_prime, make_field, Field, FieldError};
use crate::fourier::grid_len;
use crate::varieties::{PointSetError, PolyError, Polynomial, Thresholds, VarietyError};

pub use scan::{scan, ScanRow};
pub use sets::SetSpec;

/// Invalid configuration, with the offending flag and, for point files, the line.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{field}{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            line: None,
            message: message.into(),
        }
    }

    pub fn at_line(field: &str, line: usize, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            line: Some(line),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    PointSet(#[from] PointSetError),
    #[error(transparent)]
    Variety(#[from] VarietyError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error("no square root of -1 in F_{q}; iso-line needs q = 1 mod 4")]
    IsoUnavailable { q: u32 },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Largest grid any command will allocate.
pub const MAX_GRID: usize = 1 << 24;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Variety(VarietyError::Poly(_)) => EXIT_CONFIG,
            HarnessError::Variety(_) => EXIT_HYPOTHESIS,
            HarnessError::Distance(DistanceError::RoundingDivergence { .. }) => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    FieldCheck,
    FourierCheck,
    Decay,
    Weil,
    Phase,
    Distance,
    Pinned,
    Lift,
    Scan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FieldCheck => "field-check",
            Command::FourierCheck => "fourier-check",
            Command::Decay => "decay",
            Command::Weil => "weil",
            Command::Phase => "phase",
            Command::Distance => "distance",
            Command::Pinned => "pinned",
            Command::Lift => "lift",
            Command::Scan => "scan",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldParams {
    pub p: u64,
    pub n: u32,
    pub modulus: Option<Vec<u32>>,
}

impl FieldParams {
    /// Splits a prime power `q = p^n`.
    pub fn from_q(q: u64) -> Result<Self, ConfigError> {
        let not_power = || ConfigError::new("q", format!("{q} is not a prime power"));
        if q < 2 {
            return Err(not_power());
        }
        let p = (2..=q).find(|k| q.is_multiple_of(*k)).unwrap();
        let (mut rest, mut n) = (q, 0u32);
        while rest % p == 0 {
            rest /= p;
            n += 1;
        }
        if rest != 1 || !is_prime(p) {
            return Err(not_power());
        }
        Ok(Self {
            p,
            n,
            modulus: None,
        })
    }

    pub fn build(&self) -> Result<Field, FieldError> {
        make_field(self.p, self.n, self.modulus.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub field: FieldParams,
    pub d: usize,
    pub poly: Option<String>,
    pub set_e: Option<SetSpec>,
    pub set_f: Option<SetSpec>,
    pub set_e2: Option<SetSpec>,
    pub set_f2: Option<SetSpec>,
    pub t: Option<u64>,
    /// Exhaustive Weil sweep over monic polynomials of this degree.
    pub degree: Option<u32>,
    pub thresholds: Thresholds,
    pub c: f64,
    pub rho: f64,
    pub r_min: f64,
    pub pin_fraction: f64,
    pub trials: usize,
    pub seed: u64,
    /// Target products `|E||F|` for scans.
    pub grid: Vec<f64>,
    pub out: Option<PathBuf>,
    pub deterministic: bool,
    pub check_hypothesis: bool,
    pub nondegenerate: bool,
}

impl ExperimentConfig {
    pub fn new(command: Command, field: FieldParams) -> Self {
        Self {
            command,
            field,
            d: 2,
            poly: None,
            set_e: None,
            set_f: None,
            set_e2: None,
            set_f2: None,
            t: None,
            degree: None,
            thresholds: Thresholds::default(),
            c: 1.0,
            rho: 0.5,
            r_min: 0.25,
            pin_fraction: 0.5,
            trials: 1,
            seed: 0,
            grid: Vec::new(),
            out: None,
            deterministic: false,
            check_hypothesis: false,
            nondegenerate: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.d == 0 {
            return Err(ConfigError::new("d", "dimension must be at least 1"));
        }
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "need at least one trial"));
        }
        let positive = [
            ("kappa-sharp", self.thresholds.kappa_sharp),
            ("kappa-fallback", self.thresholds.kappa_fallback),
            ("C", self.c),
            ("rho", self.rho),
            ("rmin", self.r_min),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.pin_fraction > 0.0 && self.pin_fraction <= 1.0) {
            return Err(ConfigError::new(
                "pin-fraction",
                format!("must lie in (0, 1], got {}", self.pin_fraction),
            ));
        }
        if let Some(g) = self.grid.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(ConfigError::new(
                "grid",
                format!("grid points must be positive, got {g}"),
            ));
        }
        if self.command == Command::Scan && self.grid.is_empty() {
            return Err(ConfigError::new(
                "grid",
                "scan needs at least one grid point",
            ));
        }
        let sets = [
            ("setE", &self.set_e),
            ("setF", &self.set_f),
            ("setE2", &self.set_e2),
            ("setF2", &self.set_f2),
        ];
        for (name, spec) in sets {
            if let Some(SetSpec::File(path)) = spec {
                if !path.is_file() {
                    return Err(ConfigError::new(
                        name,
                        format!("{} does not exist", path.display()),
                    ));
                }
            }
        }
        for (name, spec) in [("setE", &self.set_e), ("setE2", &self.set_e2)] {
            if spec == &Some(SetSpec::Same) {
                return Err(ConfigError::new(
                    name,
                    "`same` is only valid for the second set",
                ));
            }
        }
        Ok(())
    }

    fn polynomial(&self, field: &Field, d: usize) -> Result<Polynomial, HarnessError> {
        let text = self
            .poly
            .as_deref()
            .ok_or_else(|| ConfigError::new("poly", "this command needs --poly"))?;
        Ok(Polynomial::parse(text, field, d)?)
    }
}

/// Rows written as CSV, with `#` comment lines after the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<String>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    /// UTF-8, LF line endings; a leading timestamp comment unless `deterministic`.
    pub fn to_csv(&self, deterministic: bool) -> String {
        let mut out = Vec::new();
        if !deterministic {
            out.extend_from_slice(format!("# generated_at={}\n", unix_now()).as_bytes());
        }
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            w.write_record(&self.header).expect("in-memory write");
            for row in &self.rows {
                w.write_record(row).expect("in-memory write");
            }
            w.flush().expect("in-memory write");
        }
        for line in &self.footer {
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        String::from_utf8(out).expect("csv output is UTF-8")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Option<Table>,
    pub summary: Value,
    /// Nonzero when the run completed but a hypothesis or numeric check failed.
    pub exit_code: i32,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let field = config.field.build()?;
    let dims = if config.command == Command::Lift {
        config.d + 1
    } else {
        config.d
    };
    if grid_len(field.q(), dims).is_none_or(|len| len > MAX_GRID) {
        return Err(ConfigError::new(
            "d",
            format!("F_{}^{dims} exceeds {MAX_GRID} points", field.q()),
        )
        .into());
    }
    let mut output = match config.command {
        Command::FieldCheck => commands::field_check(config, &field),
        Command::FourierCheck => commands::fourier_check(config, &field),
        Command::Decay => commands::decay(config, &field),
        Command::Weil => commands::weil(config, &field),
        Command::Phase => commands::phase(config, &field),
        Command::Distance => commands::distance(config, &field),
        Command::Pinned => commands::pinned(config, &field),
        Command::Lift => commands::lift(config, &field),
        Command::Scan => scan::run_scan(config, &field),
    }?;
    if let Value::Object(map) = &mut output.summary {
        map.insert("command".into(), config.command.name().into());
        if !config.deterministic {
            map.insert("generated_at".into(), unix_now().into());
        }
    }
    Ok(output)
}

/// Path of the JSON summary written next to a CSV output.
pub fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

/// Writes result files for `--out`, or returns the text destined for stdout.
///
/// With `--out`, a table goes to the path and the summary to `<path>.summary.json`; a
/// command without a table writes its summary to the path. Without `--out`, the table (or
/// the summary when there is none) is returned.
pub fn emit(output: &RunOutput, config: &ExperimentConfig) -> Result<String, HarnessError> {
    let summary = serde_json::to_string_pretty(&output.summary).expect("summary serializes") + "\n";
    let write = |path: &Path, text: &str| {
        std::fs::write(path, text).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    match (&config.out, &output.table) {
        (Some(path), Some(table)) => {
            write(path, &table.to_csv(config.deterministic))?;
            write(&summary_path(path), &summary)?;
            Ok(String::new())
        }
        (Some(path), None) => {
            write(path, &summary)?;
            Ok(String::new())
        }
        (None, Some(table)) => Ok(table.to_csv(config.deterministic)),
        (None, None) => Ok(summary),
    }
}

/// Shortest round-trip form, scientific for very small or large magnitudes.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
