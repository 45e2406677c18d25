//! The mean operator `mu = E_S[y x]` and its estimators under weak supervision.

use ndarray::{Array1, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{NoiseSpec, Sample};
use crate::scalar::Scalar;

/// How a mean-operator vector was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    NoiseCorrected(NoiseSpec),
    Pu { pi_plus: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanOperator<T: Scalar> {
    vector: Array1<T>,
    provenance: Provenance,
}

impl<T: Scalar> MeanOperator<T> {
    /// Wraps an arbitrary vector, e.g. one computed elsewhere.
    pub fn new(vector: Array1<T>, provenance: Provenance) -> Self {
        MeanOperator { vector, provenance }
    }

    pub fn vector(&self) -> ArrayView1<'_, T> {
        self.vector.view()
    }

    pub fn into_vector(self) -> Array1<T> {
        self.vector
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn norm(&self) -> T {
        self.vector.dot(&self.vector).sqrt()
    }
}

fn weighted_mean<T: Scalar>(s: &Sample<T>, weight: impl Fn(T) -> T) -> Array1<T> {
    let w = s.labels().mapv(weight);
    s.observations().t().dot(&w) / T::from_usize_lossy(s.len())
}

/// Exact mean operator `(1/m) sum_i y_i x_i`.
pub fn mean_op<T: Scalar>(s: &Sample<T>) -> MeanOperator<T> {
    MeanOperator::new(weighted_mean(s, |y| y), Provenance::Exact)
}

/// Unbiased estimate of the clean mean operator from labels corrupted with
/// class-conditional flip rates `noise`: each row is weighted by
/// `(y - (p_minus - p_plus)) / (1 - p_minus - p_plus)`.
pub fn noise_corrected_mean_op<T: Scalar>(noisy: &Sample<T>, noise: &NoiseSpec) -> MeanOperator<T> {
    let shift = T::lit(noise.p_minus() - noise.p_plus());
    let denom = T::lit(1.0 - noise.p_minus() - noise.p_plus());
    MeanOperator::new(
        weighted_mean(noisy, |y| (y - shift) / denom),
        Provenance::NoiseCorrected(*noise),
    )
}

/// Positive-unlabelled estimate `pi_plus * E_{S+}[x]` from labelled positives.
pub fn pu_mean_op<T: Scalar>(positives: &Sample<T>, pi_plus: f64) -> Result<MeanOperator<T>> {
    if !(pi_plus > 0.0 && pi_plus <= 1.0) {
        return Err(Error::InvalidArgument(format!("class prior {pi_plus} not in (0, 1]")));
    }
    if positives.labels().iter().any(|&y| y < T::zero()) {
        return Err(Error::InvalidSample("PU estimate given a negative example".into()));
    }
    let mean = positives.observations().mean_axis(Axis(0)).expect("nonempty");
    Ok(MeanOperator::new(mean * T::lit(pi_plus), Provenance::Pu { pi_plus }))
}

/// Both sides of `mu = Cov[x, y] + (2 pi_plus - 1) E[x]`.
#[derive(Clone, Debug)]
pub struct CovarianceCheck<T: Scalar> {
    pub lhs: Array1<T>,
    pub rhs: Array1<T>,
    pub max_abs_diff: T,
}

pub fn covariance_identity_check<T: Scalar>(s: &Sample<T>) -> CovarianceCheck<T> {
    let m = T::from_usize_lossy(s.len());
    let obs = s.observations();
    let lhs = mean_op(s).into_vector();

    let mean_x = obs.mean_axis(Axis(0)).expect("nonempty");
    let mean_y = s.labels().sum() / m;
    let mut cov = Array1::zeros(s.dim());
    for (x, &y) in obs.rows().into_iter().zip(s.labels()) {
        cov.scaled_add(y - mean_y, &(&x - &mean_x));
    }
    cov /= m;
    let pi_plus = s.positive_fraction();
    let rhs = cov + &mean_x * (T::lit(2.0) * pi_plus - T::one());

    let max_abs_diff = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (*a - *b).abs())
        .fold(T::zero(), T::max);
    CovarianceCheck { lhs, rhs, max_abs_diff }
}
