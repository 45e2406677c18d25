//! Exact square-loss robustness quantities on finite-support distributions.
//!
//! A distribution is the uniform law over the rows of a [`Sample`] (repeated
//! rows carry weight). Expected risks under label noise are computed in
//! closed form, so nothing here is sampled.

use meanop::bounds::{aln_epsilon, aln_epsilon_weighted, minimizer_distance_bound};
use meanop::loss::square;
use meanop::mean_op::mean_op;
use meanop::risk::{empirical_risk, noisy_expected_risk, Model};
use meanop::solver::{exact_minimizer_square, exact_minimizer_square_noisy, square_strong_convexity};
use meanop::{NoiseSpec, Sample};
use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::HarnessError;

/// Clean and noisy regularized square-loss minimizers and the quantities
/// entering the robustness bounds.
#[derive(Clone, Debug)]
pub struct Robustness {
    pub theta_clean: Array1<f64>,
    pub theta_noisy: Array1<f64>,
    /// `F~(theta*) - F~(theta~*)` on the noisy regularized objective.
    pub d_noisy: f64,
    /// `F(theta~*) - F(theta*)` on the clean regularized objective.
    pub d_clean: f64,
    /// Cosine between the two minimizers; `None` if either is zero.
    pub d_models: Option<f64>,
    /// Radius of the smallest origin-centred ball holding both minimizers.
    pub b: f64,
    pub mu_norm: f64,
    /// `||E[p_y y x]||`.
    pub flip_mean_norm: f64,
    /// `4 |a| B max(p) ||mu||`.
    pub epsilon: f64,
    /// `4 |a| B ||E[p_y y x]||`.
    pub epsilon_weighted: f64,
    /// Strong-convexity modulus of the regularized objective.
    pub gamma: f64,
    pub distance_sq: f64,
}

impl Robustness {
    /// `d_noisy <= epsilon + tol`.
    pub fn risk_bound_holds(&self, tol: f64) -> bool {
        self.d_noisy <= self.epsilon + tol
    }

    /// `||theta* - theta~*||^2 <= 2 epsilon / gamma + tol`.
    pub fn distance_bound_holds(&self, tol: f64) -> bool {
        let r = minimizer_distance_bound(self.epsilon, self.gamma).expect("gamma > 0");
        self.distance_sq <= r * r + tol
    }
}

fn norm(v: ArrayView1<'_, f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    (na > 0.0 && nb > 0.0).then(|| (a.dot(&b) / (na * nb)).clamp(-1.0, 1.0))
}

/// `E[p_y y x]` under `noise`.
pub fn flip_mean(s: &Sample<f64>, noise: &NoiseSpec) -> Array1<f64> {
    let w = s.labels().mapv(|y| noise.rate_for(y) * y);
    s.observations().t().dot(&w) / s.len() as f64
}

pub fn square_robustness(s: &Sample<f64>, noise: &NoiseSpec, lambda: f64) -> Result<Robustness, HarnessError> {
    let sq = square::<f64>();
    let a = -2.0;
    let clean = exact_minimizer_square(s, lambda)?;
    let noisy = exact_minimizer_square_noisy(s, noise, lambda)?;
    let reg = |m: &Model<f64>| 0.5 * lambda * m.theta().dot(&m.theta());
    let f_clean = |m: &Model<f64>| -> Result<f64, HarnessError> { Ok(empirical_risk(s, &sq, m)? + reg(m)) };
    let f_noisy = |m: &Model<f64>| -> Result<f64, HarnessError> { Ok(noisy_expected_risk(s, &sq, m, noise)? + reg(m)) };

    let d_noisy = f_noisy(&clean)? - f_noisy(&noisy)?;
    let d_clean = f_clean(&noisy)? - f_clean(&clean)?;
    let b = clean.norm().max(noisy.norm());
    let mu_norm = mean_op(s).norm();
    let flip_mean_norm = norm(flip_mean(s, noise).view());
    let diff = &clean.theta() - &noisy.theta();
    Ok(Robustness {
        d_models: cosine(clean.theta(), noisy.theta()),
        epsilon: aln_epsilon(a, b, noise, mu_norm)?,
        epsilon_weighted: aln_epsilon_weighted(a, b, flip_mean_norm)?,
        gamma: square_strong_convexity(s, lambda)?,
        distance_sq: diff.dot(&diff),
        theta_clean: clean.into_theta(),
        theta_noisy: noisy.into_theta(),
        d_noisy,
        d_clean,
        b,
        mu_norm,
        flip_mean_norm,
    })
}

/// A random finite-support distribution with `2..=10` support points in
/// `1..=5` dimensions, integer weights in `1..=5`, random labels, and flip
/// rates drawn independently from `[0, 1/2)`.
pub fn random_finite_distribution(seed: u64) -> Result<(Sample<f64>, NoiseSpec), HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=10);
    let d = rng.random_range(1..=5);
    let support = Array2::from_shape_fn((k, d), |_| rng.random_range(-1.0..1.0));
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..k {
        let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        for _ in 0..rng.random_range(1..=5) {
            rows.push(support.row(i).to_vec());
            labels.push(y);
        }
    }
    let noise = NoiseSpec::new(rng.random_range(0.0..0.5), rng.random_range(0.0..0.5))?;
    Ok((Sample::from_rows(&rows, &labels)?, noise))
}
