//! Synthetic stand-ins for the UCI benchmarks and loaders for real CSVs.

use std::path::Path;

use meanop::sample::{load_csv, CsvOptions, LabelColumn};
use meanop::Sample;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Two Gaussian classes with a shared diagonal covariance.
///
/// Features are `x = offset * c + y * (separation / 2) * u + scale .* z` with
/// `u`, `c` random unit vectors and `z` standard normal. A nonzero offset
/// mimics raw, uncentred UCI features; models carry no intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub name: String,
    pub m: usize,
    pub d: usize,
    pub positive_fraction: f64,
    pub separation: f64,
    pub offset: f64,
    pub seed: u64,
}

impl SurrogateSpec {
    pub fn generate(&self) -> Result<Sample<f64>, HarnessError> {
        if self.m < 2 || self.d < 1 || !(0.0..=1.0).contains(&self.positive_fraction) {
            return Err(HarnessError::Config(format!("invalid surrogate spec {self:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let unit = |rng: &mut ChaCha8Rng| {
            let v: Array1<f64> = Array1::from_shape_fn(self.d, |_| StandardNormal.sample(rng));
            let n = v.dot(&v).sqrt();
            v / n
        };
        let u = unit(&mut rng);
        let c = unit(&mut rng);
        let scale = Array1::from_shape_fn(self.d, |_| rng.random_range(0.5..1.5));

        let n_pos = (self.m as f64 * self.positive_fraction).round() as usize;
        let mut labels: Vec<f64> = (0..self.m).map(|i| if i < n_pos { 1.0 } else { -1.0 }).collect();
        labels.shuffle(&mut rng);
        let mut obs = Array2::zeros((self.m, self.d));
        for (i, &y) in labels.iter().enumerate() {
            for j in 0..self.d {
                let z: f64 = StandardNormal.sample(&mut rng);
                obs[[i, j]] = self.offset * c[j] + y * 0.5 * self.separation * u[j] + scale[j] * z;
            }
        }
        Ok(Sample::new(obs, Array1::from(labels))?)
    }
}

/// Three surrogates sized like the australian, heart and ionosphere sets.
pub fn uci_surrogates(seed: u64) -> Vec<SurrogateSpec> {
    let spec = |name: &str, m, d, positive_fraction, separation, offset, k: u64| SurrogateSpec {
        name: name.into(),
        m,
        d,
        positive_fraction,
        separation,
        offset,
        seed: seed.wrapping_add(k),
    };
    vec![
        spec("australian-like", 690, 14, 0.445, 3.0, 2.0, 1),
        spec("heart-like", 303, 13, 0.46, 2.5, 2.0, 2),
        spec("ionosphere-like", 351, 34, 0.64, 3.5, 2.0, 3),
    ]
}

/// A named dataset ready for the harness.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub sample: Sample<f64>,
}

pub fn surrogate_datasets(seed: u64) -> Result<Vec<Dataset>, HarnessError> {
    uci_surrogates(seed)
        .into_iter()
        .map(|s| Ok(Dataset { sample: s.generate()?, name: s.name }))
        .collect()
}

/// Loads a CSV whose last column is the label. Features are used as-is.
pub fn load_dataset(path: &Path) -> Result<Dataset, HarnessError> {
    let sample = load_csv(path, &LabelColumn::Last, &CsvOptions::default())?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(Dataset { name, sample })
}

#[cfg(test)]
mod tests {
    use super::*;
    use meanop::mean_op::mean_op;

    #[test]
    fn surrogate_shapes() {
        for spec in uci_surrogates(0) {
            let s = spec.generate().unwrap();
            assert_eq!((s.len(), s.dim()), (spec.m, spec.d));
            let pos = s.positive_fraction();
            assert!((pos - spec.positive_fraction).abs() < 1.0 / spec.m as f64);
            assert!(mean_op(&s).norm() > 0.0);
        }
    }

    #[test]
    fn surrogate_deterministic() {
        let spec = &uci_surrogates(5)[1];
        assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
        let other = SurrogateSpec { seed: 99, ..spec.clone() };
        assert_ne!(spec.generate().unwrap(), other.generate().unwrap());
    }

    #[test]
    fn invalid_spec() {
        let spec = SurrogateSpec { positive_fraction: 1.5, ..uci_surrogates(0)[0].clone() };
        assert!(spec.generate().is_err());
    }
}
