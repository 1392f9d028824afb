//! Output documents. Every type rejects unknown fields so that emitted JSON
//! can be checked by deserializing it back.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use ugat::reliability::ReliabilityReport;
use ugat::{CountVector, FitResult, Support};

use crate::args::Cli;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    /// Parsed subcommand arguments.
    pub config: serde_json::Value,
    pub seed: u64,
    pub tol: f64,
    pub max_terms: usize,
    pub version: String,
    pub input_sha256: Option<String>,
}

impl RunManifest {
    pub fn new(cli: &Cli, input: Option<&[u8]>) -> Self {
        let config = serde_json::to_value(&cli.command).unwrap_or(serde_json::Value::Null);
        Self {
            command: cli.command.name().to_owned(),
            config,
            seed: cli.seed,
            tol: cli.tol,
            max_terms: cli.max_terms,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            input_sha256: input.map(sha256_hex),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document<T> {
    pub manifest: RunManifest,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UgatPoint {
    pub x: CountVector,
    pub pmf: f64,
    pub log_pmf: f64,
    /// `None` when the box `[0, x]` exceeds the enumeration cap.
    pub cdf: Option<f64>,
    pub survival: f64,
    pub hazard: Vec<f64>,
    pub marginal_pmf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPoint {
    pub x: u64,
    pub pmf: f64,
    pub cdf: f64,
    pub sf: f64,
    pub hazard: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvalResult {
    Ugat {
        alphas: Vec<f64>,
        beta: f64,
        s: f64,
        ln_normalizer: f64,
        /// `None` where the moment is infinite or not certifiable.
        means: Vec<Option<f64>>,
        variances: Vec<Option<f64>>,
        points: Vec<UgatPoint>,
    },
    Named {
        name: String,
        support: Support,
        alpha: f64,
        beta: f64,
        s: f64,
        mean: Option<f64>,
        points: Vec<NamedPoint>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareRow {
    pub model: String,
    pub parameters: usize,
    pub neg_log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareResult {
    pub rows: Vec<CompareRow>,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSummary {
    pub path: String,
    pub rows: usize,
    pub columns: Vec<String>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityResult {
    pub alphas: Vec<f64>,
    pub beta: f64,
    pub s: f64,
    /// Grid coordinates are in the base support starting at 0.
    pub support_offset: u64,
    pub report: ReliabilityReport,
}

/// Stored comparison rows that are displayed but never recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceTable {
    pub label: String,
    pub description: String,
    pub n_obs: usize,
    pub rows: Vec<ReferenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRow {
    pub model: String,
    pub parameters: usize,
    pub neg_log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
}

pub const REFERENCE_JSON: &str = include_str!("../data/reference_fits.json");

pub fn parse_reference_table(text: &str) -> Result<ReferenceTable, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn reference_table() -> ReferenceTable {
    parse_reference_table(REFERENCE_JSON).expect("bundled reference table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_reference_parses() {
        let t = reference_table();
        assert_eq!(t.label, "transcribed, not recomputed");
        assert_eq!(t.rows.len(), 5);
        assert_eq!(t.rows[0].neg_log_likelihood.to_string(), "397.8");
        assert_eq!(t.rows[0].aic.to_string(), "813.6");
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"{"label":"x","description":"","n_obs":1,"rows":[],"extra":1}"#;
        assert!(parse_reference_table(bad).is_err());
    }

    #[test]
    fn checksum() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
