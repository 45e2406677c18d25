//! Flat result records and their CSV / JSON-lines serialization.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// One row of experiment output. Metrics a run does not produce are `None`
/// and serialize as empty CSV cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub dataset: String,
    pub p_plus: f64,
    pub p_minus: f64,
    pub loss: String,
    pub lambda: f64,
    /// Solver steps; 0 for exact solvers.
    pub iterations: u64,
    pub seed: u64,
    pub trial: u64,
    pub phi: Option<f64>,
    pub d_clean: Option<f64>,
    pub d_noisy: Option<f64>,
    pub d_models: Option<f64>,
    pub test_error_sgd: Option<f64>,
    pub test_error_mosgd: Option<f64>,
    pub mu_norm_clean: Option<f64>,
    pub mu_norm_noisy: Option<f64>,
    pub aln_epsilon: Option<f64>,
    pub zero_one_risk: Option<f64>,
    pub lambda_sgd: Option<f64>,
    pub lambda_mosgd: Option<f64>,
}

/// Column order of the CSV output.
pub const CSV_HEADER: [&str; 21] = [
    "experiment_id",
    "dataset",
    "p_plus",
    "p_minus",
    "loss",
    "lambda",
    "iterations",
    "seed",
    "trial",
    "phi",
    "d_clean",
    "d_noisy",
    "d_models",
    "test_error_sgd",
    "test_error_mosgd",
    "mu_norm_clean",
    "mu_norm_noisy",
    "aln_epsilon",
    "zero_one_risk",
    "lambda_sgd",
    "lambda_mosgd",
];

impl ExperimentRecord {
    fn metrics(&self) -> [(&'static str, Option<f64>); 11] {
        [
            ("d_clean", self.d_clean),
            ("d_noisy", self.d_noisy),
            ("d_models", self.d_models),
            ("test_error_sgd", self.test_error_sgd),
            ("test_error_mosgd", self.test_error_mosgd),
            ("mu_norm_clean", self.mu_norm_clean),
            ("mu_norm_noisy", self.mu_norm_noisy),
            ("aln_epsilon", self.aln_epsilon),
            ("zero_one_risk", self.zero_one_risk),
            ("lambda_sgd", self.lambda_sgd),
            ("lambda_mosgd", self.lambda_mosgd),
        ]
    }

    /// Checks that metrics are finite, `d_models` lies in `[-1, 1]` and error
    /// rates in `[0, 1]`.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidRecord(format!("{}/{}: {msg}", self.experiment_id, self.dataset)));
        for (name, v) in self.metrics() {
            if let Some(v) = v {
                if !v.is_finite() {
                    return bad(format!("{name} = {v} is not finite"));
                }
            }
        }
        if let Some(c) = self.d_models {
            if !(-1.0..=1.0).contains(&c) {
                return bad(format!("d_models = {c} outside [-1, 1]"));
            }
        }
        for (name, v) in [
            ("test_error_sgd", self.test_error_sgd),
            ("test_error_mosgd", self.test_error_mosgd),
            ("zero_one_risk", self.zero_one_risk),
        ] {
            if let Some(e) = v {
                if !(0.0..=1.0).contains(&e) {
                    return bad(format!("{name} = {e} outside [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub fn emit(records: &[ExperimentRecord], format: Format, path: &Path) -> Result<(), HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Empty);
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut w = BufWriter::new(File::create(path)?);
            for r in records {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn load(format: Format, path: &Path) -> Result<Vec<ExperimentRecord>, HarnessError> {
    match format {
        Format::Csv => csv::Reader::from_path(path)?
            .deserialize()
            .map(|r| r.map_err(HarnessError::from))
            .collect(),
        Format::Json => BufReader::new(File::open(path)?)
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect(),
    }
}

/// Writes `(x, y)` pairs as a two-column CSV with the given header.
pub fn write_plot(path: &Path, header: [&str; 2], points: &[(f64, f64)]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (x, y) in points {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
