//! Cross-validated comparison of plain SGD on noisy labels against
//! mean-operator SGD fed the noise-corrected estimate.

use meanop::loss::LossSpec;
use meanop::risk::zero_one_error;
use meanop::sample::{inject_noise, k_folds, split};
use meanop::solver::{mosgd_noisy, sgd_baseline, SolverConfig, UpdateMode};
use meanop::{Model, NoiseSpec, Sample};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::records::ExperimentRecord;
use crate::stats::mean;
use crate::{derive_seed, HarnessError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2Config {
    /// `(p_minus, p_plus)` cells.
    pub noise_grid: Vec<(f64, f64)>,
    pub trials: usize,
    pub folds: usize,
    pub lambda_grid: Vec<f64>,
    /// Passes over the doubled sample; `T = epochs * 2m`.
    pub epochs: usize,
    pub test_fraction: f64,
    pub update_mode: UpdateMode,
    pub seed: u64,
}

impl Default for Table2Config {
    fn default() -> Self {
        Table2Config {
            noise_grid: vec![(0.0, 0.0), (0.2, 0.4)],
            trials: 25,
            folds: 5,
            lambda_grid: (-3..=3).map(|k| 10f64.powi(k)).collect(),
            epochs: 4,
            test_fraction: 0.2,
            update_mode: UpdateMode::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sgd,
    Mosgd,
}

fn train(algo: Algorithm, s: &Sample<f64>, loss: &LossSpec<f64>, noise: &NoiseSpec, lambda: f64, cfg: &Table2Config, seed: u64) -> Result<Model<f64>, HarnessError> {
    let solver = SolverConfig::from_epochs(lambda, cfg.epochs, s.len(), seed)?.with_update_mode(cfg.update_mode);
    Ok(match algo {
        Algorithm::Sgd => sgd_baseline(s, loss, &solver)?,
        Algorithm::Mosgd => mosgd_noisy(s, loss, noise, &solver)?,
    })
}

/// Picks the `lambda` with the lowest mean validation error over `folds`;
/// ties go to the larger `lambda`. Validation labels are the noisy ones.
pub fn select_lambda(
    algo: Algorithm,
    noisy_train: &Sample<f64>,
    loss: &LossSpec<f64>,
    noise: &NoiseSpec,
    cfg: &Table2Config,
    seed: u64,
) -> Result<f64, HarnessError> {
    let folds = k_folds(noisy_train, cfg.folds, derive_seed(seed, &[0]))?;
    let mut best: Option<(f64, f64)> = None;
    for (li, &lambda) in cfg.lambda_grid.iter().enumerate() {
        let errs = folds
            .iter()
            .enumerate()
            .map(|(fi, (tr, val))| {
                let m = train(algo, tr, loss, noise, lambda, cfg, derive_seed(seed, &[1, li as u64, fi as u64]))?;
                Ok(zero_one_error(val, &m)?)
            })
            .collect::<Result<Vec<f64>, HarnessError>>()?;
        let e = mean(&errs).expect("k >= 2 folds");
        best = match best {
            Some((be, bl)) if e > be || (e == be && lambda <= bl) => Some((be, bl)),
            _ => Some((e, lambda)),
        };
    }
    best.map(|(_, l)| l).ok_or_else(|| HarnessError::Config("empty lambda grid".into()))
}

/// Mean test errors of one `(dataset, noise)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2Cell {
    pub dataset: String,
    pub p_minus: f64,
    pub p_plus: f64,
    pub trials: usize,
    pub error_sgd: f64,
    pub error_mosgd: f64,
    /// `error_mosgd - error_sgd`.
    pub difference: f64,
}

/// One record per `(dataset, cell, trial)`; the test split is drawn once per
/// dataset and labels are corrupted in the training part only.
pub fn run_table2(datasets: &[Dataset], loss: &LossSpec<f64>, cfg: &Table2Config) -> Result<Vec<ExperimentRecord>, HarnessError> {
    if cfg.trials == 0 || cfg.noise_grid.is_empty() || cfg.lambda_grid.is_empty() {
        return Err(HarnessError::Config("need trials, noise cells and a lambda grid".into()));
    }
    for ds in datasets {
        if ds.sample.len() < 100 {
            return Err(HarnessError::Config(format!("dataset {} has fewer than 100 examples", ds.name)));
        }
    }
    let splits = datasets
        .iter()
        .enumerate()
        .map(|(di, ds)| split(&ds.sample, cfg.test_fraction, derive_seed(cfg.seed, &[di as u64])))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, usize, usize)> = (0..datasets.len())
        .flat_map(|d| (0..cfg.noise_grid.len()).flat_map(move |c| (0..cfg.trials).map(move |t| (d, c, t))))
        .collect();
    jobs.par_iter()
        .map(|&(di, ci, trial)| {
            let (train_set, test_set) = &splits[di];
            let (p_minus, p_plus) = cfg.noise_grid[ci];
            let noise = NoiseSpec::new(p_plus, p_minus)?;
            let seed = derive_seed(cfg.seed, &[di as u64, ci as u64, trial as u64]);
            let noisy = inject_noise(train_set, &noise, derive_seed(seed, &[0]));
            let mut errs = [0.0; 2];
            let mut lambdas = [0.0; 2];
            for (k, algo) in [Algorithm::Sgd, Algorithm::Mosgd].into_iter().enumerate() {
                let algo_seed = derive_seed(seed, &[1 + k as u64]);
                let lambda = select_lambda(algo, &noisy, loss, &noise, cfg, algo_seed)?;
                let model = train(algo, &noisy, loss, &noise, lambda, cfg, derive_seed(algo_seed, &[2]))?;
                errs[k] = zero_one_error(test_set, &model)?;
                lambdas[k] = lambda;
            }
            Ok(ExperimentRecord {
                experiment_id: "table2".into(),
                dataset: datasets[di].name.clone(),
                p_plus,
                p_minus,
                loss: loss.name().into(),
                lambda: lambdas[1],
                iterations: (cfg.epochs * 2 * train_set.len()) as u64,
                seed,
                trial: trial as u64,
                test_error_sgd: Some(errs[0]),
                test_error_mosgd: Some(errs[1]),
                lambda_sgd: Some(lambdas[0]),
                lambda_mosgd: Some(lambdas[1]),
                ..Default::default()
            })
        })
        .collect()
}

/// Averages trial records into cells, in first-appearance order.
pub fn summarize_table2(records: &[ExperimentRecord]) -> Vec<Table2Cell> {
    let mut keys: Vec<(String, u64, u64)> = Vec::new();
    for r in records {
        let k = (r.dataset.clone(), r.p_minus.to_bits(), r.p_plus.to_bits());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(dataset, pm, pp)| {
            let rows: Vec<&ExperimentRecord> = records
                .iter()
                .filter(|r| r.dataset == dataset && r.p_minus.to_bits() == pm && r.p_plus.to_bits() == pp)
                .collect();
            let sgd: Vec<f64> = rows.iter().filter_map(|r| r.test_error_sgd).collect();
            let mo: Vec<f64> = rows.iter().filter_map(|r| r.test_error_mosgd).collect();
            let (error_sgd, error_mosgd) = (mean(&sgd).unwrap_or(f64::NAN), mean(&mo).unwrap_or(f64::NAN));
            Table2Cell {
                dataset,
                p_minus: f64::from_bits(pm),
                p_plus: f64::from_bits(pp),
                trials: rows.len(),
                error_sgd,
                error_mosgd,
                difference: error_mosgd - error_sgd,
            }
        })
        .collect()
}
