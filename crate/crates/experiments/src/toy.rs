//! The planar toy set: one negative observation and one positive one, each
//! repeated.

use meanop::mean_op::mean_op;
use meanop::Sample;

use crate::HarnessError;

/// The toy sample and its mean-operator norm.
#[derive(Clone, Debug)]
pub struct ToyData {
    pub sample: Sample<f64>,
    pub mu_norm: f64,
}

/// `(0, 1)` labelled `-1`, repeated `neg_weight` times, and `(phi/3, 1/3)`
/// labelled `+1`, repeated three times.
pub fn toy_dataset(phi: f64, neg_weight: usize) -> Result<ToyData, HarnessError> {
    if !(phi > 0.0 && phi.is_finite()) || neg_weight == 0 {
        return Err(HarnessError::Config(format!("toy set needs phi > 0 and a positive weight, got {phi}, {neg_weight}")));
    }
    let mut rows = vec![vec![0.0, 1.0]; neg_weight];
    let mut labels = vec![-1.0; neg_weight];
    rows.extend(std::iter::repeat_n(vec![phi / 3.0, 1.0 / 3.0], 3));
    labels.extend([1.0; 3]);
    let sample = Sample::from_rows(&rows, &labels)?;
    let mu_norm = mean_op(&sample).norm();
    Ok(ToyData { sample, mu_norm })
}
