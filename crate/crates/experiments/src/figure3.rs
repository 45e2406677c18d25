//! Whole-sample noise sweep: how far the minimizer learned on noisy labels is
//! from the clean one, against `p ||mu||`.

use meanop::loss::LossSpec;
use meanop::mean_op::mean_op;
use meanop::risk::{empirical_risk, zero_one_error, Model};
use meanop::sample::inject_noise;
use meanop::solver::minimize_regularized;
use meanop::NoiseSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::records::ExperimentRecord;
use crate::stats::spearman;
use crate::{derive_seed, HarnessError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure3Config {
    /// Symmetric flip rates.
    pub p_grid: Vec<f64>,
    pub lambda: f64,
    pub trials: usize,
    pub seed: u64,
    /// Gradient-norm tolerance of the full-batch minimizer.
    pub tol: f64,
}

impl Default for Figure3Config {
    fn default() -> Self {
        Figure3Config {
            p_grid: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4],
            lambda: 1e-6,
            trials: 25,
            seed: 0,
            tol: 1e-9,
        }
    }
}

fn minimize(s: &meanop::Sample<f64>, loss: &LossSpec<f64>, lambda: f64, tol: f64) -> Result<Model<f64>, HarnessError> {
    let r = minimize_regularized(s, loss, &NoiseSpec::clean(), lambda, tol, 500)?;
    if !r.converged {
        return Err(HarnessError::Config(format!(
            "minimizer stopped at gradient norm {} after {} iterations",
            r.grad_norm, r.iterations
        )));
    }
    Ok(r.model)
}

/// One record per `(dataset, p, trial)`. `d_clean = R(theta~*) - R(theta*)` on
/// the clean sample; `zero_one_risk` is the clean 0-1 risk of `theta~*`.
pub fn run_figure3(datasets: &[Dataset], loss: &LossSpec<f64>, cfg: &Figure3Config) -> Result<Vec<ExperimentRecord>, HarnessError> {
    if cfg.trials == 0 || cfg.p_grid.is_empty() {
        return Err(HarnessError::Config("need at least one trial and one noise rate".into()));
    }
    let clean_models = datasets
        .par_iter()
        .map(|ds| minimize(&ds.sample, loss, cfg.lambda, cfg.tol))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, usize, usize)> = (0..datasets.len())
        .flat_map(|d| (0..cfg.p_grid.len()).flat_map(move |p| (0..cfg.trials).map(move |t| (d, p, t))))
        .collect();
    jobs.par_iter()
        .map(|&(di, pi, trial)| {
            let ds = &datasets[di];
            let p = cfg.p_grid[pi];
            let seed = derive_seed(cfg.seed, &[di as u64, pi as u64, trial as u64]);
            let noisy = inject_noise(&ds.sample, &NoiseSpec::symmetric(p)?, seed);
            let theta_noisy = minimize(&noisy, loss, cfg.lambda, cfg.tol)?;
            let theta_clean = &clean_models[di];
            let d_clean = empirical_risk(&ds.sample, loss, &theta_noisy)? - empirical_risk(&ds.sample, loss, theta_clean)?;
            Ok(ExperimentRecord {
                experiment_id: "figure3".into(),
                dataset: ds.name.clone(),
                p_plus: p,
                p_minus: p,
                loss: loss.name().into(),
                lambda: cfg.lambda,
                seed,
                trial: trial as u64,
                d_clean: Some(d_clean),
                zero_one_risk: Some(zero_one_error(&ds.sample, &theta_noisy)?),
                mu_norm_clean: Some(mean_op(&ds.sample).norm()),
                mu_norm_noisy: Some(mean_op(&noisy).norm()),
                ..Default::default()
            })
        })
        .collect()
}

/// `(p ||mu_D||, d_clean)` for every record.
pub fn association_points(records: &[ExperimentRecord]) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter_map(|r| Some((r.p_plus * r.mu_norm_clean?, r.d_clean?)))
        .collect()
}

/// Spearman correlation between `p ||mu_D||` and `d_clean`.
pub fn figure3_spearman(records: &[ExperimentRecord]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = association_points(records).into_iter().unzip();
    spearman(&x, &y)
}

/// Noise-free rows must have `d_clean` below `tol`; every record must validate.
pub fn figure3_violations(records: &[ExperimentRecord], tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    for r in records {
        if r.p_plus == 0.0 && !(r.d_clean.unwrap_or(f64::NAN).abs() <= tol) {
            out.push(format!("{} trial {}: noise-free d_clean {:?}", r.dataset, r.trial, r.d_clean));
        }
        if let Err(e) = r.validate() {
            out.push(e.to_string());
        }
    }
    out
}
