use meanop::bounds::mean_op_deviation_bound;
use meanop::loss::{catalog, hinge, logistic, square};
use meanop::mean_op::{mean_op, noise_corrected_mean_op};
use meanop::risk::{empirical_risk, estimated_risk, factored_risk, zero_one_error};
use meanop::sample::{double_sample, inject_noise, split};
use meanop::solver::{mosgd_noisy, mosgd_train, sgd_baseline};
use meanop::{Model, Model32, NoiseSpec, Sample, Sample32, Sample64, SolverConfig, SolverConfig64};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(m: usize, d: usize, sep: f64, seed: u64) -> Sample64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = Array1::from_shape_fn(m, |i| if i % 2 == 0 { 1.0 } else { -1.0 });
    let obs = Array2::from_shape_fn((m, d), |(i, j)| {
        let centre = if j == 0 { labels[i] * sep } else { 0.0 };
        centre + rng.random_range(-1.0..1.0)
    });
    Sample::new(obs, labels).unwrap()
}

// Rows x1, x2, x1 + x2 labelled (+, +, -) or (-, -, +) carry zero mean
// operator either way, so any linear-odd risk cannot tell the labellings apart.
fn twin_labellings(seed: u64, extra: usize, d: usize) -> (Sample64, Sample64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<f64> { (0..d).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let (x1, x2) = (draw(), draw());
    let x3: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
    let mut rows = vec![x1, x2, x3];
    let mut tail = Vec::new();
    for i in 0..extra {
        rows.push(draw());
        tail.push(if i % 3 == 0 { 1.0 } else { -1.0 });
    }
    let mut y = vec![1.0, 1.0, -1.0];
    y.extend(&tail);
    let mut y_swapped = vec![-1.0, -1.0, 1.0];
    y_swapped.extend(&tail);
    (Sample::from_rows(&rows, &y).unwrap(), Sample::from_rows(&rows, &y_swapped).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mean_operator_is_sufficient(seed in any::<u64>(), extra in 0usize..20, d in 1usize..6, scale in 0.1f64..5.0) {
        let (s, t) = twin_labellings(seed, extra, d);
        let mu_s = mean_op(&s);
        let mu_t = mean_op(&t);
        for (a, b) in mu_s.vector().iter().zip(mu_t.vector()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let model = Model::new(Array1::from_shape_fn(d, |_| scale * rng.random_range(-1.0..1.0)));
        for loss in catalog::<f64>().iter().filter(|l| l.odd_slope().is_some()) {
            let (rs, rt) = (empirical_risk(&s, loss, &model).unwrap(), empirical_risk(&t, loss, &model).unwrap());
            prop_assert!((rs - rt).abs() <= 1e-12 * (1.0 + rs.abs()), "{}: {} vs {}", loss.name(), rs, rt);
        }
    }
}

#[test]
fn hinge_is_not_sufficient() {
    let s = Sample::from_rows(&[vec![1.0], vec![1.0], vec![2.0]], &[1.0, 1.0, -1.0]).unwrap();
    let t = s.flip_all_labels();
    let model = Model::new(Array1::from(vec![1.0]));
    assert!(mean_op(&s).norm() < 1e-15 && mean_op(&t).norm() < 1e-15);
    let h = hinge::<f64>();
    let (rs, rt) = (empirical_risk(&s, &h, &model).unwrap(), empirical_risk(&t, &h, &model).unwrap());
    // margins (1, 1, -2) against (-1, -1, 2)
    assert!((rs - 1.0).abs() < 1e-15 && (rt - 4.0 / 3.0).abs() < 1e-15, "{rs} vs {rt}");
}

#[test]
fn noisy_risk_estimate_is_unbiased() {
    let clean = blobs(60, 3, 0.7, 11);
    let noise = NoiseSpec::new(0.35, 0.15).unwrap();
    let loss = logistic::<f64>();
    let model = Model::new(Array1::from(vec![0.8, -0.3, 0.5]));
    let truth = empirical_risk(&clean, &loss, &model).unwrap();
    let s2x = double_sample(&clean);
    let n = 4000;
    let draws: Vec<f64> = (0..n)
        .map(|k| {
            let noisy = inject_noise(&clean, &noise, 1000 + k);
            estimated_risk(&s2x, &noise_corrected_mean_op(&noisy, &noise), &loss, &model).unwrap()
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - truth).abs() < 4.0 * se, "mean {mean}, truth {truth}, se {se}");
}

#[test]
fn deviation_bound_covers_sample_means() {
    // x uniform on [-1, 1]^d / sqrt(d), y = sign(x_0): mu_D = e_0 / (2 sqrt d)
    let (d, m, delta) = (4usize, 400usize, 0.05);
    let r = 1.0 / (d as f64).sqrt();
    let mut mu_d = Array1::zeros(d);
    mu_d[0] = r / 2.0;
    let bound = mean_op_deviation_bound(1.0, d, m, delta).unwrap();
    let mut misses = 0;
    let runs = 200;
    for k in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        let obs = Array2::from_shape_fn((m, d), |_| rng.random_range(-r..r));
        let labels = obs.column(0).mapv(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let mu = mean_op(&Sample::new(obs, labels).unwrap()).into_vector();
        let gap = (&mu - &mu_d).mapv(|v| v * v).sum().sqrt();
        if gap > bound {
            misses += 1;
        }
    }
    assert!((misses as f64) / (runs as f64) <= delta, "{misses} misses of {runs}");
}

#[test]
fn factored_training_learns_separable_blobs() {
    let s = blobs(400, 3, 2.0, 5);
    let (train, test) = split(&s, 0.25, 9).unwrap();
    let loss = logistic::<f64>();
    let cfg = SolverConfig64::from_epochs(1e-2, 5, train.len(), 1).unwrap();
    let mosgd = mosgd_train(&double_sample(&train), &mean_op(&train), &loss, &cfg).unwrap();
    let sgd = sgd_baseline(&train, &loss, &cfg).unwrap();
    assert!(zero_one_error(&test, &mosgd).unwrap() < 0.1);
    assert!(zero_one_error(&test, &sgd).unwrap() < 0.1);
    assert!(mosgd.norm() <= cfg.radius() * (1.0 + 1e-12));

    let noise = NoiseSpec::new(0.3, 0.1).unwrap();
    let noisy = inject_noise(&train, &noise, 3);
    let m = mosgd_noisy(&noisy, &loss, &noise, &cfg).unwrap();
    assert!(zero_one_error(&test, &m).unwrap() < 0.2);
}

#[test]
fn single_precision_pipeline() {
    let s: Sample32 = blobs(200, 2, 2.0, 8).cast().unwrap();
    let loss = square::<f32>();
    let mu = mean_op(&s);
    let model: Model32 = Model::new(Array1::from(vec![0.4f32, -0.1]));
    let direct = empirical_risk(&s, &loss, &model).unwrap();
    let factored = factored_risk(&double_sample(&s), &mu, &loss, &model).unwrap();
    assert!((direct - factored).abs() < 1e-5 * (1.0 + direct.abs()));
    let cfg = SolverConfig::<f32>::from_epochs(0.1, 3, s.len(), 2).unwrap();
    let trained = mosgd_train(&double_sample(&s), &mu, &loss, &cfg).unwrap();
    assert!(zero_one_error(&s, &trained).unwrap() < 0.1);
}
