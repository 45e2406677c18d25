//! Closed-form generalization and robustness bounds, plus Monte-Carlo
//! estimators for the quantities they control.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::sample::{DoubledSample, NoiseSpec};
use crate::scalar::Scalar;

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg()))
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    require(v >= 0.0 && v.is_finite(), || format!("{name} must be finite and nonnegative, got {v}"))
}

/// `v(m) = 1/2 + 1/2 sqrt(1/2 - 1/m)` for even `m >= 2`.
pub fn rademacher_v(m: usize) -> Result<f64> {
    require(m >= 2 && m.is_multiple_of(2), || format!("m must be even and at least 2, got {m}"))?;
    Ok(0.5 + 0.5 * (0.5 - 1.0 / m as f64).sqrt())
}

/// Rademacher complexity bound `v(m) B X / sqrt(2m)` for the doubled sample.
pub fn rademacher_bound(b: f64, x: f64, m: usize) -> Result<f64> {
    nonneg("B", b)?;
    nonneg("X", x)?;
    Ok(rademacher_v(m)? * b * x / (2.0 * m as f64).sqrt())
}

/// Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Estimates `E_sigma sup_{||theta|| <= B} (1/2m) sum_i sigma_i <theta, x_i>`
/// over the rows of the doubled sample; the supremum is
/// `B ||(1/2m) sum_i sigma_i x_i||`.
pub fn empirical_rademacher_mc<T: Scalar>(s2x: &DoubledSample<T>, b: f64, n_draws: usize, seed: u64) -> Result<Estimate> {
    nonneg("B", b)?;
    require(n_draws >= 1, || "need at least one draw".into())?;
    let obs = s2x.observations();
    let n = s2x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Array1::<f64>::zeros(s2x.dim());
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_draws {
        acc.fill(0.0);
        for row in obs.rows() {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            acc.zip_mut_with(&row, |a, &x| *a += sign * x.as_f64());
        }
        let value = b * acc.dot(&acc).sqrt() / n as f64;
        sum += value;
        sum_sq += value * value;
    }
    let k = n_draws as f64;
    let mean = sum / k;
    let var = if n_draws > 1 { ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0) } else { 0.0 };
    Ok(Estimate { mean, stderr: (var / k).sqrt() })
}

/// High-probability deviation `X sqrt((2d/m) log(d/delta))` of the sample
/// mean operator from its expectation.
pub fn mean_op_deviation_bound(x: f64, d: usize, m: usize, delta: f64) -> Result<f64> {
    nonneg("X", x)?;
    require(d >= 1 && m >= 1, || format!("need d, m >= 1, got d = {d}, m = {m}"))?;
    require(delta > 0.0 && delta < 1.0, || format!("delta must lie in (0, 1), got {delta}"))?;
    let (d, m) = (d as f64, m as f64);
    Ok(x * ((2.0 * d / m) * (d / delta).ln()).sqrt())
}

/// `c(X, B) = max(l(XB), l(-XB))`.
pub fn c_of_xb<T: Scalar>(loss: &LossSpec<T>, x: T, b: T) -> T {
    let xb = x * b;
    loss.eval(xb).max(loss.eval(-xb))
}

/// Leading constant of the complexity term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityConstant {
    /// `(sqrt 2 + 1) / 4`
    #[default]
    Statement,
    /// `(sqrt 2 + 1) / 2`
    Proof,
}

impl ComplexityConstant {
    pub fn value(self) -> f64 {
        let k = std::f64::consts::SQRT_2 + 1.0;
        match self {
            ComplexityConstant::Statement => k / 4.0,
            ComplexityConstant::Proof => k / 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Feature norm bound.
    pub x: f64,
    /// Model norm bound.
    pub b: f64,
    /// Lipschitz constant of the loss.
    pub l: f64,
    /// Odd slope of the loss.
    pub a: f64,
    pub m: usize,
    pub d: usize,
    pub delta: f64,
    /// `max(l(XB), l(-XB))`.
    pub c_xb: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("X", self.x), ("B", self.b), ("L", self.l), ("c(X, B)", self.c_xb)] {
            nonneg(name, v)?;
        }
        require(self.a.is_finite(), || format!("odd slope must be finite, got {}", self.a))?;
        require(self.m >= 1 && self.d >= 1, || format!("need m, d >= 1, got m = {}, d = {}", self.m, self.d))?;
        require(self.delta > 0.0 && self.delta < 1.0, || format!("delta must lie in (0, 1), got {}", self.delta))
    }

    /// Fills `l`, `a` and `c_xb` from a linear-odd loss.
    pub fn for_loss<T: Scalar>(loss: &LossSpec<T>, x: f64, b: f64, m: usize, d: usize, delta: f64) -> Result<Self> {
        let a = loss.require_odd_slope()?.as_f64();
        let l = loss
            .lipschitz()
            .ok_or_else(|| Error::InvalidArgument(format!("loss `{}` has no Lipschitz constant", loss.name())))?
            .as_f64();
        let c_xb = c_of_xb(loss, T::lit(x), T::lit(b)).as_f64();
        let inputs = BoundInputs { x, b, l, a, m, d, delta, c_xb };
        inputs.validate()?;
        Ok(inputs)
    }

    fn complexity(&self, k: ComplexityConstant) -> f64 {
        k.value() * self.x * self.b * self.l / (self.m as f64).sqrt()
    }

    fn explicit(&self, k: ComplexityConstant, linear_scale: f64) -> f64 {
        let d = self.d as f64;
        let linear = 2.0 * self.a.abs() * self.x * self.b * (d * d.ln()).sqrt() * linear_scale;
        let conf = ((2.0 / self.delta).ln() / self.m as f64).sqrt();
        self.complexity(k) + (self.c_xb * self.l / 2.0 + linear) * conf
    }
}

/// Excess-risk bound for the empirical risk minimizer of an `a`-linear-odd,
/// `L`-Lipschitz loss over the `B`-ball, holding with probability `1 - delta`.
pub fn generalization_bound(b: &BoundInputs, k: ComplexityConstant) -> Result<f64> {
    b.validate()?;
    Ok(b.explicit(k, 1.0))
}

/// The same bound with the mean-operator deviation `||mu_D - mu_S||` supplied
/// directly instead of bounded.
pub fn generalization_bound_with_deviation(b: &BoundInputs, k: ComplexityConstant, deviation: f64) -> Result<f64> {
    b.validate()?;
    nonneg("deviation", deviation)?;
    let conf = ((1.0 / b.delta).ln() / b.m as f64).sqrt();
    Ok(b.complexity(k) + b.c_xb * b.l / 2.0 * conf + 2.0 * b.a.abs() * b.b * deviation)
}

/// [`generalization_bound`] for a minimizer trained on noisy labels with the
/// noise-corrected mean operator; only the linear term grows, by
/// `1 / (1 - p_minus - p_plus)`.
pub fn noisy_generalization_bound(b: &BoundInputs, noise: &NoiseSpec, k: ComplexityConstant) -> Result<f64> {
    b.validate()?;
    Ok(b.explicit(k, 1.0 / (1.0 - noise.p_minus() - noise.p_plus())))
}

/// `4 |a| B max(p_plus, p_minus) ||mu||`.
pub fn aln_epsilon(a: f64, b: f64, noise: &NoiseSpec, mu_norm: f64) -> Result<f64> {
    nonneg("B", b)?;
    nonneg("mean operator norm", mu_norm)?;
    require(a.is_finite(), || format!("odd slope must be finite, got {a}"))?;
    Ok(4.0 * a.abs() * b * noise.max_rate() * mu_norm)
}

/// `4 |a| B ||w||` with `w = E[p_y y x]` the label-weighted flip mass.
/// Dominates the excess noisy risk also when the flip rates differ.
pub fn aln_epsilon_weighted(a: f64, b: f64, flip_mean_norm: f64) -> Result<f64> {
    nonneg("B", b)?;
    nonneg("flip mean norm", flip_mean_norm)?;
    require(a.is_finite(), || format!("odd slope must be finite, got {a}"))?;
    Ok(4.0 * a.abs() * b * flip_mean_norm)
}

/// `sqrt(2 epsilon / gamma)`: distance between the clean and noisy minimizers
/// of a `gamma`-strongly convex objective whose noisy excess risk is at most
/// `epsilon`.
pub fn minimizer_distance_bound(epsilon: f64, gamma: f64) -> Result<f64> {
    nonneg("epsilon", epsilon)?;
    require(gamma > 0.0 && gamma.is_finite(), || format!("gamma must be positive, got {gamma}"))?;
    Ok((2.0 * epsilon / gamma).sqrt())
}
