//! Toy robustness study: exact clean and noisy square-loss minimizers on the
//! toy set over a grid of `phi` and symmetric noise rates.

use meanop::NoiseSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::records::ExperimentRecord;
use crate::robustness::square_robustness;
use crate::toy::toy_dataset;
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure2Config {
    pub phi_grid: Vec<f64>,
    /// Symmetric flip rates.
    pub p_grid: Vec<f64>,
    pub lambda: f64,
    pub neg_weight: usize,
}

impl Default for Figure2Config {
    fn default() -> Self {
        Figure2Config {
            phi_grid: log_grid(1e-4, 1.0, 13),
            p_grid: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45],
            lambda: 1e-6,
            neg_weight: 5,
        }
    }
}

/// `n` points from `lo` to `hi`, evenly spaced in log scale.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// One record per `(phi, p)` pair, in row-major order over the two grids.
pub fn run_figure2(cfg: &Figure2Config) -> Result<Vec<ExperimentRecord>, HarnessError> {
    if cfg.phi_grid.is_empty() || cfg.p_grid.is_empty() {
        return Err(HarnessError::Config("empty grid".into()));
    }
    let points: Vec<(f64, f64)> = cfg
        .phi_grid
        .iter()
        .flat_map(|&phi| cfg.p_grid.iter().map(move |&p| (phi, p)))
        .collect();
    points
        .par_iter()
        .map(|&(phi, p)| {
            let toy = toy_dataset(phi, cfg.neg_weight)?;
            let noise = NoiseSpec::symmetric(p)?;
            let r = square_robustness(&toy.sample, &noise, cfg.lambda)?;
            let noisy_mu = meanop::solver::expected_noisy_mean(&toy.sample, &noise);
            Ok(ExperimentRecord {
                experiment_id: "figure2".into(),
                dataset: format!("toy(w={})", cfg.neg_weight),
                p_plus: p,
                p_minus: p,
                loss: "square".into(),
                lambda: cfg.lambda,
                phi: Some(phi),
                d_clean: Some(r.d_clean),
                d_noisy: Some(r.d_noisy),
                d_models: r.d_models,
                mu_norm_clean: Some(toy.mu_norm),
                mu_norm_noisy: Some(noisy_mu.dot(&noisy_mu).sqrt()),
                aln_epsilon: Some(r.epsilon),
                ..Default::default()
            })
        })
        .collect()
}

/// Invariant violations among figure-2 records: robustness dominance at every
/// point and zero discrepancy without noise.
pub fn figure2_violations(records: &[ExperimentRecord], tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    for r in records {
        let (d_noisy, eps) = (r.d_noisy.unwrap_or(f64::NAN), r.aln_epsilon.unwrap_or(f64::NAN));
        if !(d_noisy <= eps + 1e-10) {
            out.push(format!("phi={:?} p={}: d_noisy {d_noisy} exceeds epsilon {eps}", r.phi, r.p_plus));
        }
        if r.p_plus == 0.0 && r.p_minus == 0.0 {
            let d_clean = r.d_clean.unwrap_or(f64::NAN);
            if !(d_noisy.abs() <= tol && d_clean.abs() <= tol) {
                out.push(format!("phi={:?}: noise-free discrepancy {d_noisy}, {d_clean}", r.phi));
            }
        }
        if let Err(e) = r.validate() {
            out.push(e.to_string());
        }
    }
    out
}

/// `(phi, d_noisy)` at symmetric rate `p`, sorted by `phi`.
pub fn d_noisy_over_phi(records: &[ExperimentRecord], p: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.p_plus == p && r.p_minus == p)
        .filter_map(|r| Some((r.phi?, r.d_noisy?)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

/// Whether the `y` values never drop by more than `tol`.
pub fn nondecreasing(points: &[(f64, f64)], tol: f64) -> bool {
    points.windows(2).all(|w| w[1].1 >= w[0].1 - tol)
}
