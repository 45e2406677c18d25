//! Labelled samples, the label-free doubled sample, label-noise injection,
//! CSV ingestion and train/test splitting.

use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `m x d` observations with labels in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T: Scalar> {
    observations: Array2<T>,
    labels: Array1<T>,
    feature_bound: T,
}

fn max_row_norm<T: Scalar>(obs: ArrayView2<'_, T>) -> T {
    obs.rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(T::zero(), T::max)
}

impl<T: Scalar> Sample<T> {
    pub fn new(observations: Array2<T>, labels: Array1<T>) -> Result<Self> {
        let (m, d) = observations.dim();
        if m == 0 || d == 0 {
            return Err(Error::InvalidSample(format!("empty sample ({m} x {d})")));
        }
        if labels.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: labels.len() });
        }
        if let Some(bad) = labels.iter().find(|&&y| y != T::one() && y != -T::one()) {
            return Err(Error::InvalidLabel(bad.as_f64()));
        }
        if let Some(bad) = observations.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad.as_f64()));
        }
        let feature_bound = max_row_norm(observations.view());
        Ok(Sample { observations, labels, feature_bound })
    }

    /// Builds a sample from row vectors.
    pub fn from_rows(rows: &[Vec<T>], labels: &[T]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: r.len() });
        }
        let flat: Vec<T> = rows.iter().flatten().copied().collect();
        let obs = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::InvalidSample(e.to_string()))?;
        Self::new(obs, Array1::from(labels.to_vec()))
    }

    pub fn observations(&self) -> ArrayView2<'_, T> {
        self.observations.view()
    }

    pub fn labels(&self) -> ArrayView1<'_, T> {
        self.labels.view()
    }

    pub fn len(&self) -> usize {
        self.observations.nrows()
    }

    /// Always `false`: a valid sample has at least one row.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.observations.ncols()
    }

    /// Largest row L2 norm, `X`.
    pub fn feature_bound(&self) -> T {
        self.feature_bound
    }

    /// Fraction of positive labels.
    pub fn positive_fraction(&self) -> T {
        let pos = self.labels.iter().filter(|&&y| y > T::zero()).count();
        T::from_usize_lossy(pos) / T::from_usize_lossy(self.len())
    }

    /// Same observations, labels replaced.
    pub fn with_labels(&self, labels: Array1<T>) -> Result<Self> {
        Self::new(self.observations.clone(), labels)
    }

    /// Applies `f` to the observation matrix; the feature bound is recomputed.
    pub fn map_observations(&self, f: impl FnOnce(ArrayView2<'_, T>) -> Array2<T>) -> Result<Self> {
        Self::new(f(self.observations.view()), self.labels.clone())
    }

    pub fn flip_all_labels(&self) -> Self {
        Sample {
            observations: self.observations.clone(),
            labels: self.labels.mapv(|y| -y),
            feature_bound: self.feature_bound,
        }
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSample("empty subset".into()));
        }
        Self::new(
            self.observations.select(Axis(0), indices),
            self.labels.select(Axis(0), indices),
        )
    }

    /// Rows with label `+1`, if any.
    pub fn positives(&self) -> Result<Self> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] > T::zero()).collect();
        self.subset(&idx)
    }

    /// Converts the scalar type (e.g. `f64 -> f32`).
    pub fn cast<U: Scalar>(&self) -> Result<Sample<U>> {
        Sample::new(
            self.observations.mapv(|v| U::lit(v.as_f64())),
            self.labels.mapv(|v| U::lit(v.as_f64())),
        )
    }
}

/// Each observation twice, once with sign `+1` (rows `0..m`) and once with
/// `-1` (rows `m..2m`). Carries no label information.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubledSample<T: Scalar> {
    observations: Array2<T>,
    signs: Array1<T>,
}

impl<T: Scalar> DoubledSample<T> {
    /// Builds `S_2x` from observations alone.
    pub fn from_observations(obs: ArrayView2<'_, T>) -> Self {
        let m = obs.nrows();
        let observations = concatenate(Axis(0), &[obs, obs]).expect("same shape");
        let signs = Array1::from_shape_fn(2 * m, |i| if i < m { T::one() } else { -T::one() });
        DoubledSample { observations, signs }
    }

    pub fn observations(&self) -> ArrayView2<'_, T> {
        self.observations.view()
    }

    pub fn signs(&self) -> ArrayView1<'_, T> {
        self.signs.view()
    }

    /// Number of rows, `2m`.
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// Size of the source sample, `m`.
    pub fn source_len(&self) -> usize {
        self.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.observations.ncols()
    }

    pub fn feature_bound(&self) -> T {
        max_row_norm(self.observations.slice(s![..self.source_len(), ..]))
    }
}

pub fn double_sample<T: Scalar>(s: &Sample<T>) -> DoubledSample<T> {
    DoubledSample::from_observations(s.observations())
}

/// Class-conditional label flip rates: positives flip with `p_plus`,
/// negatives with `p_minus`, each in `[0, 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    p_plus: f64,
    p_minus: f64,
}

impl NoiseSpec {
    pub fn new(p_plus: f64, p_minus: f64) -> Result<Self> {
        let ok = |p: f64| (0.0..0.5).contains(&p);
        if ok(p_plus) && ok(p_minus) {
            Ok(NoiseSpec { p_plus, p_minus })
        } else {
            Err(Error::InvalidNoise { p_plus, p_minus })
        }
    }

    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn clean() -> Self {
        NoiseSpec { p_plus: 0.0, p_minus: 0.0 }
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    /// Flip rate for an example whose true label is `y`.
    pub fn rate_for<T: Scalar>(&self, y: T) -> f64 {
        if y > T::zero() {
            self.p_plus
        } else {
            self.p_minus
        }
    }

    pub fn max_rate(&self) -> f64 {
        self.p_plus.max(self.p_minus)
    }

    pub fn is_clean(&self) -> bool {
        self.p_plus == 0.0 && self.p_minus == 0.0
    }
}

/// Independently flips each label with its class-conditional rate.
/// One uniform draw is consumed per row regardless of the label.
pub fn inject_noise<T: Scalar>(s: &Sample<T>, noise: &NoiseSpec, seed: u64) -> Sample<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = s.labels.mapv(|y| {
        let u: f64 = rng.random();
        if u < noise.rate_for(y) {
            -y
        } else {
            y
        }
    });
    Sample {
        observations: s.observations.clone(),
        labels,
        feature_bound: s.feature_bound,
    }
}

/// Which CSV column holds the label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    /// The last column.
    Last,
}

#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    /// Standardize every feature to zero mean, unit variance after loading.
    pub standardize: bool,
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

/// Reads a numeric CSV. A first row containing any non-numeric cell is taken
/// as a header. Labels in `{0, 1}` are mapped to `{-1, +1}`.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label: &LabelColumn, opts: &CsvOptions) -> Result<Sample<T>> {
    let path = path.as_ref();
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut records = reader.records().enumerate().peekable();
    let mut header: Option<Vec<String>> = None;
    if let Some((_, Ok(first))) = records.peek() {
        if first.iter().any(|c| parse_cell(c).is_none()) {
            header = Some(first.iter().map(str::to_string).collect());
            records.next();
        }
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in records {
        let rec = rec?;
        let line = i + 1;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for cell in rec.iter() {
            match parse_cell(cell) {
                Some(v) if v.is_finite() => row.push(v),
                _ => return Err(parse_err(line, format!("non-numeric or non-finite cell `{cell}`"))),
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }
    let width = rows[0].len();
    let label_idx = match label {
        LabelColumn::Last => width.checked_sub(1).ok_or_else(|| parse_err(1, "empty row".into()))?,
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| parse_err(1, format!("no label column named `{name}`")))?,
    };
    if label_idx >= width {
        return Err(parse_err(1, format!("label column {label_idx} out of range (width {width})")));
    }
    if width < 2 {
        return Err(parse_err(1, "need at least one feature column".into()));
    }
    let zero_one = rows.iter().all(|r| r[label_idx] == 0.0 || r[label_idx] == 1.0);
    let mut labels = Vec::with_capacity(rows.len());
    let mut flat = Vec::with_capacity(rows.len() * (width - 1));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(parse_err(i + 1, format!("expected {width} columns, found {}", row.len())));
        }
        let y = match row[label_idx] {
            v if zero_one && v == 0.0 => -1.0,
            v if v == 1.0 || v == -1.0 => v,
            v => return Err(parse_err(i + 1, format!("label {v} not in {{-1, +1}} or {{0, 1}}"))),
        };
        labels.push(T::lit(y));
        flat.extend(row.iter().enumerate().filter(|(j, _)| *j != label_idx).map(|(_, v)| T::lit(*v)));
    }
    let obs = Array2::from_shape_vec((rows.len(), width - 1), flat)
        .map_err(|e| Error::InvalidSample(e.to_string()))?;
    let sample = Sample::new(obs, Array1::from(labels))?;
    if opts.standardize {
        Standardizer::fit(&sample).apply(&sample)
    } else {
        Ok(sample)
    }
}

/// Per-feature affine map to zero mean and unit variance, fitted on one
/// sample and applied to others.
#[derive(Clone, Debug)]
pub struct Standardizer<T: Scalar> {
    mean: Array1<T>,
    scale: Array1<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(s: &Sample<T>) -> Self {
        let obs = s.observations();
        let mean = obs.mean_axis(Axis(0)).expect("nonempty");
        let scale = obs.std_axis(Axis(0), T::zero()).mapv(|sd| if sd > T::zero() { sd } else { T::one() });
        Standardizer { mean, scale }
    }

    pub fn apply(&self, s: &Sample<T>) -> Result<Sample<T>> {
        s.map_observations(|obs| (&obs - &self.mean) / &self.scale)
    }
}

fn permutation(m: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Random `(train, test)` split with `round(m * test_fraction)` test rows.
pub fn split<T: Scalar>(s: &Sample<T>, test_fraction: f64, seed: u64) -> Result<(Sample<T>, Sample<T>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let m = s.len();
    let n_test = (m as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= m {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} leaves an empty side for m = {m}"
        )));
    }
    let idx = permutation(m, seed);
    let (test, train) = idx.split_at(n_test);
    Ok((s.subset(train)?, s.subset(test)?))
}

/// `k` disjoint validation folds covering the sample, each paired with its
/// complement as training set. Fold sizes differ by at most one.
pub fn k_folds<T: Scalar>(s: &Sample<T>, k: usize, seed: u64) -> Result<Vec<(Sample<T>, Sample<T>)>> {
    let m = s.len();
    if k < 2 || k > m {
        return Err(Error::InvalidArgument(format!("need 2 <= k <= m, got k = {k}, m = {m}")));
    }
    let idx = permutation(m, seed);
    let bounds: Vec<usize> = (0..=k).map(|f| f * m / k).collect();
    bounds
        .windows(2)
        .map(|w| {
            let val: Vec<usize> = idx[w[0]..w[1]].to_vec();
            let train: Vec<usize> = idx[..w[0]].iter().chain(&idx[w[1]..]).copied().collect();
            Ok((s.subset(&train)?, s.subset(&val)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::io::Write;

    fn toy(m: usize, d: usize, seed: u64) -> Sample<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs = Array2::from_shape_fn((m, d), |_| rng.random_range(-1.0..1.0));
        let labels = Array1::from_shape_fn(m, |_| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        Sample::new(obs, labels).unwrap()
    }

    #[test]
    fn validation() {
        assert!(matches!(
            Sample::new(array![[1.0]], array![0.5]),
            Err(Error::InvalidLabel(_))
        ));
        assert!(Sample::new(Array2::<f64>::zeros((0, 2)), Array1::zeros(0)).is_err());
        assert!(Sample::new(array![[1.0, 2.0]], array![1.0, 1.0]).is_err());
        assert!(Sample::new(array![[f64::NAN]], array![1.0]).is_err());
        let s = Sample::new(array![[3.0, 4.0], [0.0, 1.0]], array![1.0, -1.0]).unwrap();
        assert_eq!(s.feature_bound(), 5.0);
        let scaled = s.map_observations(|o| o.mapv(|v| v * 2.0)).unwrap();
        assert_eq!(scaled.feature_bound(), 10.0);
    }

    #[test]
    fn doubling() {
        let s = Sample::new(array![[1.0, 2.0]], array![1.0]).unwrap();
        let d = double_sample(&s);
        assert_eq!(d.observations(), array![[1.0, 2.0], [1.0, 2.0]]);
        assert_eq!(d.signs(), array![1.0, -1.0]);

        let s = toy(3, 2, 1);
        let d = double_sample(&s);
        assert_eq!(d.len(), 6);
        assert_eq!(d.signs().sum(), 0.0);
        for i in 0..3 {
            assert_eq!(d.observations().row(i), d.observations().row(i + 3));
            assert_eq!(d.signs()[i], -d.signs()[i + 3]);
        }
        assert_eq!(double_sample(&s), double_sample(&s.flip_all_labels()));
        assert_eq!(d.feature_bound(), s.feature_bound());
    }

    #[test]
    fn noise_spec_validation() {
        assert!(NoiseSpec::new(0.5, 0.0).is_err());
        assert!(NoiseSpec::new(0.0, -0.1).is_err());
        assert!(NoiseSpec::new(0.49, 0.2).is_ok());
    }

    #[test]
    fn noise_injection() {
        let s = toy(50, 3, 2);
        assert_eq!(inject_noise(&s, &NoiseSpec::clean(), 7), s);
        let n = NoiseSpec::new(0.3, 0.1).unwrap();
        let a = inject_noise(&s, &n, 11);
        assert_eq!(a, inject_noise(&s, &n, 11));
        assert_eq!(a.observations(), s.observations());
        assert_eq!(double_sample(&a), double_sample(&s));
    }

    #[test]
    fn flip_rate_large_sample() {
        // binomial(1e5, 0.49) has sd 0.00158; 0.005 is > 3 sd
        let m = 100_000;
        let s = Sample::new(Array2::zeros((m, 1)), Array1::from_elem(m, 1.0)).unwrap();
        let noisy = inject_noise(&s, &NoiseSpec::new(0.49, 0.0).unwrap(), 5);
        let flipped = noisy.labels().iter().filter(|&&y| y < 0.0).count() as f64 / m as f64;
        assert!((flipped - 0.49).abs() < 0.005, "{flipped}");
    }

    #[test]
    fn flip_rate_over_seeds() {
        let s = toy(400, 2, 3);
        let (p_plus, p_minus) = (0.3, 0.15);
        let n = NoiseSpec::new(p_plus, p_minus).unwrap();
        let pos = s.labels().iter().filter(|&&y| y > 0.0).count() as f64;
        let neg = s.len() as f64 - pos;
        let r = 200;
        let (mut fp, mut fn_) = (0.0, 0.0);
        for seed in 0..r {
            let noisy = inject_noise(&s, &n, seed);
            for (y, yt) in s.labels().iter().zip(noisy.labels()) {
                if y != yt {
                    if *y > 0.0 { fp += 1.0 } else { fn_ += 1.0 }
                }
            }
        }
        let (rf, mf) = (fp / (r as f64 * pos), fn_ / (r as f64 * neg));
        assert!((rf - p_plus).abs() < 4.0 * (p_plus * (1.0 - p_plus) / (r as f64 * pos)).sqrt());
        assert!((mf - p_minus).abs() < 4.0 * (p_minus * (1.0 - p_minus) / (r as f64 * neg)).sqrt());
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_loading() {
        let f = write_tmp("1,0,+1\n0,1,-1\n");
        let s: Sample<f64> = load_csv(f.path(), &LabelColumn::Last, &CsvOptions::default()).unwrap();
        assert_eq!((s.len(), s.dim()), (2, 2));
        assert_eq!(s.labels(), array![1.0, -1.0]);

        let f = write_tmp("a,label,b\n1,1,2\n3,0,4\n");
        let s: Sample<f64> = load_csv(f.path(), &LabelColumn::Name("label".into()), &CsvOptions::default()).unwrap();
        assert_eq!(s.labels(), array![1.0, -1.0]);
        assert_eq!(s.observations(), array![[1.0, 2.0], [3.0, 4.0]]);

        let f = write_tmp("1,NaN,1\n");
        assert!(load_csv::<f64>(f.path(), &LabelColumn::Last, &CsvOptions::default()).is_err());
        let f = write_tmp("1,2,1\n2,x,-1\n");
        assert!(load_csv::<f64>(f.path(), &LabelColumn::Last, &CsvOptions::default()).is_err());
        let f = write_tmp("");
        assert!(load_csv::<f64>(f.path(), &LabelColumn::Last, &CsvOptions::default()).is_err());
        let f = write_tmp("a,b\n1,1\n");
        assert!(load_csv::<f64>(f.path(), &LabelColumn::Name("y".into()), &CsvOptions::default()).is_err());
        let f = write_tmp("1,2\n1,3\n");
        assert!(load_csv::<f64>(f.path(), &LabelColumn::Last, &CsvOptions::default()).is_err());
    }

    #[test]
    fn csv_standardize() {
        let f = write_tmp("1,10,1\n3,30,-1\n5,50,1\n");
        let s: Sample<f64> = load_csv(f.path(), &LabelColumn::Last, &CsvOptions { standardize: true }).unwrap();
        let mean = s.observations().mean_axis(Axis(0)).unwrap();
        assert!(mean.iter().all(|v| v.abs() < 1e-12));
        let sd = s.observations().std_axis(Axis(0), 0.0);
        assert!(sd.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn splitting() {
        let s = toy(10, 2, 4);
        let (train, test) = split(&s, 0.2, 9).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(split(&s, 0.2, 9).unwrap(), (train, test));
        assert!(split(&s, 0.0, 1).is_err());
        assert!(split(&s, 0.01, 1).is_err());
    }

    #[test]
    fn folds_partition_rows() {
        let s = toy(23, 1, 5);
        let folds = k_folds(&s, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        // observations are distinct reals, so values identify rows
        let mut seen: Vec<f64> = folds.iter().flat_map(|(_, v)| v.observations().column(0).to_vec()).collect();
        seen.sort_by(f64::total_cmp);
        let mut all = s.observations().column(0).to_vec();
        all.sort_by(f64::total_cmp);
        assert_eq!(seen, all);
        for (train, val) in &folds {
            assert_eq!(train.len() + val.len(), 23);
            assert!(val.len() == 4 || val.len() == 5);
            for v in val.observations().column(0) {
                assert!(!train.observations().column(0).iter().any(|t| t == v));
            }
        }
        assert!(k_folds(&s, 1, 0).is_err());
        assert!(k_folds(&s, 24, 0).is_err());
    }
}
