//! `meanop` command-line front end.

mod experiment;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use meanop::bounds::{
    aln_epsilon, generalization_bound, mean_op_deviation_bound, noisy_generalization_bound, rademacher_bound, rademacher_v,
    BoundInputs, ComplexityConstant,
};
use meanop::loss::{catalog, loss_by_name};
use meanop::mean_op::{mean_op, noise_corrected_mean_op, pu_mean_op};
use meanop::risk::{empirical_risk, factored_risk, general_factored_risk, zero_one_error};
use meanop::sample::{double_sample, inject_noise, load_csv, split, CsvOptions, LabelColumn};
use meanop::solver::{mosgd_noisy, prox_train, sgd_baseline, Regularizer};
use meanop::{LossSpec64, Model, NoiseSpec, Sample64, SolverConfig, UpdateMode};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "meanop", version, about = "Loss factorization, mean-operator estimation and mu-SGD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the named losses with their odd slope and Lipschitz constant.
    Catalog,
    /// Estimate the mean operator of a labelled CSV (last column is the label).
    EstimateMu {
        #[arg(long)]
        data: PathBuf,
        /// Known flip rates `p+,p-`; enables the noise-corrected estimator.
        #[arg(long, value_parser = parse_noise)]
        noise: Option<NoiseSpec>,
        /// Treat the rows labelled +1 as the positive set of PU data with this class prior.
        #[arg(long, conflicts_with = "noise")]
        pu_prior: Option<f64>,
        #[arg(long)]
        standardize: bool,
    },
    /// Maximum residual between the empirical risk and its factored form on random samples.
    FactorizeCheck {
        #[arg(long)]
        loss: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a linear classifier on a CSV and report train and test 0-1 error.
    Train {
        #[arg(long, value_enum, default_value_t = Algo::Mosgd)]
        algo: Algo,
        #[arg(long, default_value = "logistic")]
        loss: String,
        #[arg(long, default_value_t = 1e-2)]
        lambda: f64,
        #[arg(long, default_value_t = 4)]
        epochs: usize,
        /// Flip rates `p+,p-` injected into the training labels.
        #[arg(long, value_parser = parse_noise)]
        noise: Option<NoiseSpec>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, value_enum, default_value_t = Mode::PaperFaithful)]
        update_mode: Mode,
        /// Regularizer for `--algo prox`.
        #[arg(long, value_enum, default_value_t = Reg::L2)]
        reg: Reg,
        /// Step size for `--algo prox`.
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        /// Full-batch iterations for `--algo prox`.
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        #[arg(long)]
        standardize: bool,
    },
    /// Evaluate one of the bound calculators.
    Bounds {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value = "logistic")]
        loss: String,
        /// Feature norm bound.
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        /// Model norm bound.
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        d: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, value_parser = parse_noise)]
        noise: Option<NoiseSpec>,
        #[arg(long)]
        mu_norm: Option<f64>,
        #[arg(long, value_enum, default_value_t = Constant::Statement)]
        constant: Constant,
    },
    /// Run an experiment and write records.csv, summary.json and plot_*.csv.
    Experiment {
        #[arg(value_enum)]
        which: experiment::Kind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Labelled CSVs used instead of the built-in surrogates.
        #[arg(long, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long, default_value = "logistic")]
        loss: String,
        /// Overrides the number of trials per cell.
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Mosgd,
    Sgd,
    Prox,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    PaperFaithful,
    RiskConsistent,
}

impl From<Mode> for UpdateMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::PaperFaithful => UpdateMode::PaperFaithful,
            Mode::RiskConsistent => UpdateMode::RiskConsistent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Reg {
    L2,
    L1,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Rademacher,
    Deviation,
    Generalization,
    Noisy,
    Aln,
}

#[derive(Clone, Copy, ValueEnum)]
enum Constant {
    Statement,
    Proof,
}

impl From<Constant> for ComplexityConstant {
    fn from(c: Constant) -> Self {
        match c {
            Constant::Statement => ComplexityConstant::Statement,
            Constant::Proof => ComplexityConstant::Proof,
        }
    }
}

fn parse_noise(raw: &str) -> Result<NoiseSpec, String> {
    let (p, q) = raw.split_once(',').ok_or_else(|| format!("expected `p+,p-`, got `{raw}`"))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad rate `{s}`: {e}"));
    NoiseSpec::new(num(p)?, num(q)?).map_err(|e| e.to_string())
}

fn load(path: &Path, standardize: bool) -> Result<Sample64> {
    load_csv(path, &LabelColumn::Last, &CsvOptions { standardize }).with_context(|| format!("loading {}", path.display()))
}

fn print(value: serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn catalog_cmd() -> Result<()> {
    let rows: Vec<_> = catalog::<f64>()
        .iter()
        .map(|l| {
            json!({
                "name": l.name(),
                "odd_slope": l.odd_slope(),
                "lipschitz": l.lipschitz(),
                "convex": l.is_convex(),
            })
        })
        .collect();
    print(json!(rows))
}

fn estimate_mu_cmd(data: &Path, noise: Option<NoiseSpec>, pu_prior: Option<f64>, standardize: bool) -> Result<()> {
    let s = load(data, standardize)?;
    let mu = match (noise, pu_prior) {
        (_, Some(pi)) => pu_mean_op(&s.positives()?, pi)?,
        (Some(n), None) => noise_corrected_mean_op(&s, &n),
        (None, None) => mean_op(&s),
    };
    print(json!({
        "vector": mu.vector().to_vec(),
        "norm": mu.norm(),
        "provenance": mu.provenance(),
    }))
}

fn random_case(rng: &mut ChaCha8Rng) -> Result<(Sample64, Model<f64>)> {
    let m = rng.random_range(1..=64);
    let d = rng.random_range(1..=16);
    let obs = Array2::from_shape_fn((m, d), |_| rng.random_range(-1.0..1.0));
    let labels = Array1::from_shape_fn(m, |_| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let scale = rng.random_range(0.0..10.0) / (d as f64).sqrt();
    let theta = Array1::from_shape_fn(d, |_| rng.random_range(-scale..scale));
    Ok((Sample64::new(obs, labels)?, Model::new(theta)))
}

fn factorize_check_cmd(loss: &LossSpec64, trials: usize, seed: u64) -> Result<()> {
    if trials == 0 {
        bail!("need at least one trial");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_relative = 0.0f64;
    for _ in 0..trials {
        let (s, model) = random_case(&mut rng)?;
        let risk = empirical_risk(&s, loss, &model)?;
        let factored = match loss.odd_slope() {
            Some(_) => factored_risk(&double_sample(&s), &mean_op(&s), loss, &model)?,
            None => general_factored_risk(&s, loss, &model)?.total(),
        };
        let r = (risk - factored).abs();
        worst = worst.max(r);
        worst_relative = worst_relative.max(r / (1.0 + risk.abs()));
    }
    print(json!({
        "loss": loss.name(),
        "form": if loss.odd_slope().is_some() { "linear_odd" } else { "general" },
        "trials": trials,
        "seed": seed,
        "max_residual": worst,
        "max_relative_residual": worst_relative,
    }))
}

#[allow(clippy::too_many_arguments)]
fn train_cmd(
    algo: Algo,
    loss: &LossSpec64,
    lambda: f64,
    epochs: usize,
    noise: NoiseSpec,
    seed: u64,
    data: &Path,
    test_fraction: f64,
    mode: UpdateMode,
    reg: Reg,
    eta: f64,
    iterations: usize,
    standardize: bool,
) -> Result<()> {
    let s = load(data, standardize)?;
    let (train, test) = split(&s, test_fraction, seed)?;
    let noisy = inject_noise(&train, &noise, seed.wrapping_add(1));
    let model = match algo {
        Algo::Mosgd => {
            let cfg = SolverConfig::from_epochs(lambda, epochs, noisy.len(), seed)?.with_update_mode(mode);
            mosgd_noisy(&noisy, loss, &noise, &cfg)?
        }
        Algo::Sgd => sgd_baseline(&noisy, loss, &SolverConfig::from_epochs(lambda, epochs, noisy.len(), seed)?)?,
        Algo::Prox => {
            let r = match reg {
                Reg::L2 => Regularizer::L2(lambda),
                Reg::L1 => Regularizer::L1(lambda),
            };
            prox_train(&double_sample(&noisy), &noise_corrected_mean_op(&noisy, &noise), loss, r, eta, iterations, mode)?
        }
    };
    print(json!({
        "algo": match algo { Algo::Mosgd => "mosgd", Algo::Sgd => "sgd", Algo::Prox => "prox" },
        "loss": loss.name(),
        "lambda": lambda,
        "noise": noise,
        "seed": seed,
        "theta": model.theta().to_vec(),
        "train_size": train.len(),
        "test_size": test.len(),
        "train_error_noisy_labels": zero_one_error(&noisy, &model)?,
        "train_error": zero_one_error(&train, &model)?,
        "test_error": zero_one_error(&test, &model)?,
    }))
}

#[allow(clippy::too_many_arguments)]
fn bounds_cmd(
    which: Which,
    loss_name: &str,
    x: f64,
    b: f64,
    m: usize,
    d: usize,
    delta: f64,
    noise: Option<NoiseSpec>,
    mu_norm: Option<f64>,
    constant: ComplexityConstant,
) -> Result<()> {
    let loss = loss_by_name::<f64>(loss_name)?;
    let (value, inputs) = match which {
        Which::Rademacher => (rademacher_bound(b, x, m)?, json!({ "b": b, "x": x, "m": m, "v": rademacher_v(m)? })),
        Which::Deviation => (mean_op_deviation_bound(x, d, m, delta)?, json!({ "x": x, "d": d, "m": m, "delta": delta })),
        Which::Generalization => {
            let bi = BoundInputs::for_loss(&loss, x, b, m, d, delta)?;
            (generalization_bound(&bi, constant)?, json!({ "loss": loss_name, "inputs": bi, "constant": constant }))
        }
        Which::Noisy => {
            let n = noise.context("--noise is required")?;
            let bi = BoundInputs::for_loss(&loss, x, b, m, d, delta)?;
            (noisy_generalization_bound(&bi, &n, constant)?, json!({ "loss": loss_name, "inputs": bi, "noise": n, "constant": constant }))
        }
        Which::Aln => {
            let n = noise.context("--noise is required")?;
            let mu = mu_norm.context("--mu-norm is required")?;
            let a = loss.require_odd_slope()?;
            (aln_epsilon(a, b, &n, mu)?, json!({ "loss": loss_name, "a": a, "b": b, "noise": n, "mu_norm": mu }))
        }
    };
    print(json!({ "value": value, "inputs": inputs }))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Catalog => catalog_cmd()?,
        Command::EstimateMu { data, noise, pu_prior, standardize } => estimate_mu_cmd(&data, noise, pu_prior, standardize)?,
        Command::FactorizeCheck { loss, trials, seed } => factorize_check_cmd(&loss_by_name(&loss)?, trials, seed)?,
        Command::Train {
            algo,
            loss,
            lambda,
            epochs,
            noise,
            seed,
            data,
            test_fraction,
            update_mode,
            reg,
            eta,
            iterations,
            standardize,
        } => train_cmd(
            algo,
            &loss_by_name(&loss)?,
            lambda,
            epochs,
            noise.unwrap_or_else(NoiseSpec::clean),
            seed,
            &data,
            test_fraction,
            update_mode.into(),
            reg,
            eta,
            iterations,
            standardize,
        )?,
        Command::Bounds { which, loss, x, b, m, d, delta, noise, mu_norm, constant } => {
            bounds_cmd(which, &loss, x, b, m, d, delta, noise, mu_norm, constant.into())?
        }
        Command::Experiment { which, out, seed, data, loss, trials } => {
            return experiment::run(which, &out, seed, &data, &loss_by_name(&loss)?, trials);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
