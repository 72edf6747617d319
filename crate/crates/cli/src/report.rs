//! Per-experiment results, the scenario summary and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// One pass/fail check with the measured value and its limit.
#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    /// `"<="`, `">="`, `"=="`.
    pub relation: &'static str,
    pub limit: f64,
    pub pass: bool,
}

impl Criterion {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<=",
            limit,
            pass: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">=",
            limit,
            pass: value >= limit,
        }
    }

    pub fn equals(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "==",
            limit: expected,
            pass: value == expected,
        }
    }

    /// A boolean property reported as 1/0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::equals(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub criteria: Vec<Criterion>,
    pub csv: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub kind: &'static str,
    pub pass: bool,
    pub csv: Option<String>,
    pub criteria: Vec<Criterion>,
    pub error: Option<String>,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub pass: bool,
    pub experiments: Vec<ExperimentSummary>,
}

/// Writes through a temporary file in the same directory, then renames, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let file_name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{file_name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// File-system friendly form of an experiment name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect();
    s.trim_matches('-').to_string()
}

/// Formats floats with full round-trip precision so CSVs are byte-stable.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_compare_as_labelled() {
        assert!(Criterion::at_most("a", 1.0, 1.0).pass);
        assert!(!Criterion::at_least("b", 0.5, 1.0).pass);
        assert!(Criterion::holds("c", true).pass);
        assert!(!Criterion::equals("d", f64::NAN, 1.0).pass);
    }

    #[test]
    fn slugs_are_path_safe() {
        assert_eq!(slug("Wave front / N=128"), "wave-front---n-128");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
