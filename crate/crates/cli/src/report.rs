use std::fmt::{Debug, Write as _};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag values; exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Quantum(#[from] harmonia_quantum::QuantumError),
}

#[derive(Debug, Error)]
pub enum CoreError {
    #[error(transparent)]
    Anneal(#[from] harmonia_core::anneal::AnnealError),
    #[error(transparent)]
    Grammar(#[from] harmonia_core::grammar::GrammarError),
    #[error(transparent)]
    Tree(#[from] harmonia_core::trees::TreeError),
}

impl From<harmonia_core::anneal::AnnealError> for CliError {
    fn from(e: harmonia_core::anneal::AnnealError) -> Self {
        Self::Core(e.into())
    }
}

impl From<harmonia_core::grammar::GrammarError> for CliError {
    fn from(e: harmonia_core::grammar::GrammarError) -> Self {
        Self::Core(e.into())
    }
}

impl From<harmonia_core::trees::TreeError> for CliError {
    fn from(e: harmonia_core::trees::TreeError) -> Self {
        Self::Core(e.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// First 16 hex digits of the SHA-256 of a command's resolved parameters.
pub fn config_digest(command: &str, params: &impl Debug) -> String {
    let hash = Sha256::digest(format!("{command}|{params:?}").as_bytes());
    hash.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// What a command produced: a CSV body, human-readable summary lines and
/// whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub csv: String,
    pub summary: Vec<String>,
    pub passed: bool,
}

impl Report {
    /// Starts a CSV with the schema line, an experiment line and `columns`.
    pub fn new(command: &str, params: &impl Debug, columns: &str) -> Self {
        let csv = format!(
            "# schema=1\n# experiment={command} digest={}\n{columns}\n",
            config_digest(command, params)
        );
        Self { csv, summary: Vec::new(), passed: true }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.csv.push_str(&fields.join(","));
        self.csv.push('\n');
    }

    /// Records a named check as a PASS/FAIL line.
    pub fn check(&mut self, ok: bool, what: impl AsRef<str>) {
        let tag = if ok { "PASS" } else { "FAIL" };
        self.summary.push(format!("{tag} {}", what.as_ref()));
        self.passed &= ok;
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    /// Writes the CSV to `out` (summary to stdout) or, without `out`, the
    /// CSV to stdout and the summary to stderr.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        match out {
            Some(p) => {
                std::fs::write(p, &self.csv)?;
                for l in &self.summary {
                    println!("{l}");
                }
            }
            None => {
                print!("{}", self.csv);
                for l in &self.summary {
                    eprintln!("{l}");
                }
            }
        }
        Ok(())
    }
}

/// Comma-separated counts with inclusive `a..b` ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsizeList(pub Vec<usize>);

/// Parses `4,16,64`, `2..64` (inclusive) or a mix of both.
pub fn parse_usize_list(text: &str) -> std::result::Result<UsizeList, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| format!("bad range start in `{part}`"))?;
            let b: usize = b.trim().parse().map_err(|_| format!("bad range end in `{part}`"))?;
            if a > b {
                return Err(format!("empty range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("`{part}` is not a count"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(UsizeList(out))
}

/// `f64` display that keeps infinities readable in CSV.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn sci(x: f64) -> String {
    format!("{x:e}")
}
