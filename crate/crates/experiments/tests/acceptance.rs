//! Acceptance suite. Runs every criterion at its stated tolerance and time
//! budget, prints one PASS/FAIL line per criterion and exits nonzero if any
//! criterion fails.

use std::time::{Duration, Instant};

use meanop::bounds::{empirical_rademacher_mc, minimizer_distance_bound, rademacher_bound};
use meanop::loss::{catalog, exponential, hinge, logistic, square, zero_one};
use meanop::mean_op::{mean_op, noise_corrected_mean_op};
use meanop::risk::{empirical_risk, factored_gradient, factored_risk, general_factored_risk, Model};
use meanop::sample::{double_sample, inject_noise};
use meanop::solver::{mosgd_train_observed, stochastic_direction, SolverConfig, UpdateMode};
use meanop::{NoiseSpec, Sample};
use meanop_experiments::datasets::surrogate_datasets;
use meanop_experiments::figure2::{d_noisy_over_phi, figure2_violations, log_grid, nondecreasing, run_figure2, Figure2Config};
use meanop_experiments::figure3::{figure3_spearman, figure3_violations, run_figure3, Figure3Config};
use meanop_experiments::robustness::{random_finite_distribution, square_robustness};
use meanop_experiments::table2::{run_table2, summarize_table2, Table2Config};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Uniform draw from the unit ball in `d` dimensions.
fn unit_ball_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r: f64 = rng.random::<f64>().powf(1.0 / d as f64);
    v.into_iter().map(|x| x * r / n).collect()
}

fn random_case(rng: &mut ChaCha8Rng) -> (Sample<f64>, Model<f64>) {
    let m = rng.random_range(1..=64);
    let d = rng.random_range(1..=16);
    let rows: Vec<Vec<f64>> = (0..m).map(|_| unit_ball_point(rng, d)).collect();
    let labels: Vec<f64> = (0..m).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let theta: Vec<f64> = unit_ball_point(rng, d).into_iter().map(|v| 10.0 * v).collect();
    (Sample::from_rows(&rows, &labels).unwrap(), Model::new(Array1::from(theta)))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lols: Vec<_> = catalog::<f64>().into_iter().filter(|l| l.odd_slope().is_some()).collect();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for l in &lols {
        for _ in 0..50 {
            let (s, model) = random_case(&mut rng);
            let r = empirical_risk(&s, l, &model).unwrap();
            let f = factored_risk(&double_sample(&s), &mean_op(&s), l, &model).unwrap();
            let rel = (r - f).abs() / (1.0 + r.abs());
            worst = worst.max(rel);
            failures += usize::from(rel >= 1e-10);
        }
    }
    outcome(
        failures == 0 && lols.len() == 7,
        format!("{} LOLs x 50 cases, worst scaled residual {worst:.2e}, {failures} over 1e-10", lols.len()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for l in [hinge::<f64>(), zero_one(), exponential()] {
        for _ in 0..50 {
            let (s, model) = random_case(&mut rng);
            let r = empirical_risk(&s, &l, &model).unwrap();
            let f = general_factored_risk(&s, &l, &model).unwrap().total();
            let rel = (r - f).abs() / (1.0 + r.abs());
            worst = worst.max(rel);
            failures += usize::from(rel >= 1e-10);
        }
    }
    outcome(failures == 0, format!("hinge, 01, exponential x 50 cases, worst scaled residual {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let obs = Array2::from_shape_fn((200, 5), |_| rng.random_range(-1.0..1.0));
    let labels = Array1::from_shape_fn(200, |_| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let s = Sample::new(obs, labels).unwrap();
    let noise = NoiseSpec::new(0.3, 0.1).unwrap();
    let n = 10_000;
    let draws: Vec<Array1<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|seed| noise_corrected_mean_op(&inject_noise(&s, &noise, 1_000_000 + seed), &noise).into_vector())
        .collect();
    let avg = draws.iter().fold(Array1::<f64>::zeros(5), |a, v| a + v) / n as f64;
    let var = draws.iter().fold(Array1::<f64>::zeros(5), |a, v| a + (v - &avg).mapv(|e| e * e)) / (n as f64 - 1.0);
    let target = mean_op(&s).into_vector();
    let z: Vec<f64> = (0..5).map(|j| (avg[j] - target[j]).abs() / (var[j] / n as f64).sqrt()).collect();
    let worst = z.iter().cloned().fold(0.0, f64::max);
    outcome(worst < 4.0, format!("10^4 resamples, worst coordinate deviation {worst:.2} standard errors"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cases: Vec<(usize, usize, u64)> = (0..20)
        .map(|_| (2 * rng.random_range(4..=128), rng.random_range(2..=16), rng.random()))
        .collect();
    let results: Vec<(usize, usize, f64, f64, f64)> = cases
        .par_iter()
        .map(|&(m, d, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let obs = Array2::from_shape_fn((m, d), |_| rng.random_range(-1.0..1.0));
            let labels = Array1::from_shape_fn(m, |_| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
            let s = Sample::new(obs, labels).unwrap();
            let b = 1.0;
            let est = empirical_rademacher_mc(&double_sample(&s), b, 20_000, seed).unwrap();
            let bound = rademacher_bound(b, s.feature_bound(), m).unwrap();
            (m, d, est.mean, est.stderr, bound)
        })
        .collect();
    let bad: Vec<_> = results.iter().filter(|(_, _, e, se, b)| *e > b + 3.0 * se).collect();
    let ratio = results.iter().map(|(_, _, e, _, b)| e / b).fold(0.0, f64::max);
    outcome(bad.is_empty(), format!("20 datasets, max estimate/bound ratio {ratio:.3}, {} violations", bad.len()))
}

fn criterion_5() -> Outcome {
    let lambda = 1e-2;
    let mut risk_bad = Vec::new();
    let mut dist_bad = Vec::new();
    for seed in 0..50 {
        let (s, noise) = random_finite_distribution(5_000 + seed).unwrap();
        let r = square_robustness(&s, &noise, lambda).unwrap();
        if !r.risk_bound_holds(1e-10) {
            risk_bad.push(format!("#{seed}: d={:.3e} eps={:.3e} (p+={:.2}, p-={:.2})", r.d_noisy, r.epsilon, noise.p_plus(), noise.p_minus()));
        }
        let bound = minimizer_distance_bound(r.epsilon, r.gamma).unwrap();
        if r.distance_sq > bound * bound + 1e-10 {
            dist_bad.push(seed);
        }
    }
    let detail = format!(
        "50 distributions with asymmetric noise: {} risk-bound violations, {} distance-bound violations{}",
        risk_bad.len(),
        dist_bad.len(),
        risk_bad.first().map(|s| format!("; first {s}")).unwrap_or_default()
    );
    outcome(risk_bad.is_empty() && dist_bad.is_empty(), detail)
}

fn criterion_6() -> Outcome {
    let cfg = Figure2Config { phi_grid: log_grid(1e-4, 1.0, 13), p_grid: vec![0.0, 0.2], lambda: 1e-6, neg_weight: 5 };
    let recs = run_figure2(&cfg).unwrap();
    let curve = d_noisy_over_phi(&recs, 0.2);
    let mono = nondecreasing(&curve, 1e-8);
    let zero = d_noisy_over_phi(&recs, 0.0).iter().all(|(_, d)| d.abs() <= 1e-8);
    let violations = figure2_violations(&recs, 1e-8);
    outcome(
        mono && zero && violations.is_empty() && curve.len() == 13,
        format!(
            "d_noisy over phi at p=0.2 from {:.4e} to {:.4e}, nondecreasing={mono}, zero at p=0: {zero}, {} invariant violations",
            curve.first().map_or(f64::NAN, |p| p.1),
            curve.last().map_or(f64::NAN, |p| p.1),
            violations.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let datasets = surrogate_datasets(7).unwrap();
    let cfg = Table2Config { seed: 7, ..Default::default() };
    let recs = run_table2(&datasets, &logistic(), &cfg).unwrap();
    let cells = summarize_table2(&recs);
    let mut pass = cells.len() == 6;
    let mut parts = Vec::new();
    for c in &cells {
        let ok = if c.p_minus == 0.0 && c.p_plus == 0.0 { c.difference.abs() <= 0.03 } else { c.difference <= -0.04 };
        pass &= ok && c.trials == 25;
        parts.push(format!(
            "{} ({:.1},{:.1}): sgd {:.3} mosgd {:.3} diff {:+.3}{}",
            c.dataset,
            c.p_minus,
            c.p_plus,
            c.error_sgd,
            c.error_mosgd,
            c.difference,
            if ok { "" } else { " [x]" }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let datasets = surrogate_datasets(8).unwrap();
    let cfg = Figure3Config { seed: 8, ..Default::default() };
    let recs = run_figure3(&datasets, &logistic(), &cfg).unwrap();
    let rho = figure3_spearman(&recs).unwrap_or(f64::NAN);
    let violations = figure3_violations(&recs, 1e-6);
    outcome(
        rho >= 0.6 && violations.is_empty(),
        format!("{} records, Spearman(p |mu|, d_clean) = {rho:.3}, {} invariant violations", recs.len(), violations.len()),
    )
}

fn criterion_9() -> Outcome {
    let datasets = surrogate_datasets(9).unwrap();
    let s = &datasets[0].sample;
    let s2x = double_sample(s);
    let mu = mean_op(s);
    let mut max_excess = f64::NEG_INFINITY;
    let mut steps = 0usize;
    for (mode, lambda) in [(UpdateMode::PaperFaithful, 1e-3f64), (UpdateMode::RiskConsistent, 0.5)] {
        let cfg = SolverConfig::from_epochs(lambda, 4, s.len(), 9).unwrap().with_update_mode(mode);
        let radius = lambda.powf(-0.5);
        mosgd_train_observed(&s2x, &mu, &square(), &cfg, |_, th| {
            max_excess = max_excess.max(th.dot(&th).sqrt() - radius);
            steps += 1;
        })
        .unwrap();
    }
    let projection_ok = max_excess <= 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for l in catalog::<f64>().iter().filter(|l| l.odd_slope().is_some()) {
        let a = l.odd_slope().unwrap();
        for _ in 0..10 {
            let theta = Array1::from_shape_fn(s.dim(), |_| rng.random_range(-1.0..1.0));
            let avg = (0..s2x.len())
                .map(|r| stochastic_direction(&s2x, mu.vector(), l, a, theta.view(), r, UpdateMode::RiskConsistent))
                .fold(Array1::<f64>::zeros(s.dim()), |acc, v| acc + v)
                / s2x.len() as f64;
            let grad = factored_gradient(&s2x, mu.vector(), a, l, theta.view());
            worst = worst.max((avg - grad).iter().fold(0.0, |m, v| m.max(v.abs())));
        }
    }
    outcome(
        projection_ok && worst <= 1e-12,
        format!("{steps} steps, max norm excess over radius {max_excess:.2e}; direction vs gradient max error {worst:.2e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        ("factorization identity", criterion_1, Duration::from_secs(5)),
        ("general even/odd factorization", criterion_2, Duration::from_secs(5)),
        ("noise-corrected estimator unbiasedness", criterion_3, Duration::from_secs(30)),
        ("Rademacher dominance", criterion_4, Duration::from_secs(60)),
        ("robustness bound dominance", criterion_5, Duration::from_secs(60)),
        ("toy-set discrepancy trend", criterion_6, Duration::from_secs(60)),
        ("SGD vs mu-SGD test error", criterion_7, Duration::from_secs(600)),
        ("noise sweep association", criterion_8, Duration::from_secs(600)),
        ("solver invariants", criterion_9, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "{} criterion {} ({name}): {} [{:.2}s / {}s budget{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
