//! Empirical risk of linear models in plain and factored form.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::loss::{odd_part, LossSpec};
use crate::mean_op::MeanOperator;
use crate::sample::{DoubledSample, NoiseSpec, Sample};
use crate::scalar::Scalar;

/// Linear hypothesis `x -> <theta, x>` with an optional norm cap `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T: Scalar> {
    theta: Array1<T>,
    norm_cap: Option<T>,
}

impl<T: Scalar> Model<T> {
    pub fn new(theta: Array1<T>) -> Self {
        Model { theta, norm_cap: None }
    }

    /// Fails if `||theta|| > cap`.
    pub fn with_cap(theta: Array1<T>, cap: T) -> Result<Self> {
        let norm = theta.dot(&theta).sqrt();
        let slack = T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) * (T::one() + cap);
        if !(norm <= cap + slack) {
            return Err(Error::InvalidArgument(format!("model norm {norm} exceeds cap {cap}")));
        }
        Ok(Model { theta, norm_cap: Some(cap) })
    }

    pub fn zeros(d: usize) -> Self {
        Self::new(Array1::zeros(d))
    }

    pub fn theta(&self) -> ArrayView1<'_, T> {
        self.theta.view()
    }

    pub fn into_theta(self) -> Array1<T> {
        self.theta
    }

    pub fn norm_cap(&self) -> Option<T> {
        self.norm_cap
    }

    pub fn norm(&self) -> T {
        self.theta.dot(&self.theta).sqrt()
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `<theta, x>` for every row of `obs`.
    pub fn scores(&self, obs: ArrayView2<'_, T>) -> Array1<T> {
        obs.dot(&self.theta)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn mean<T: Scalar>(values: impl Iterator<Item = T>, n: usize) -> T {
    values.sum::<T>() / T::from_usize_lossy(n)
}

/// `(1/m) sum_i l(y_i <theta, x_i>)`.
pub fn empirical_risk<T: Scalar>(s: &Sample<T>, loss: &LossSpec<T>, model: &Model<T>) -> Result<T> {
    check_dim(s.dim(), model.dim())?;
    let scores = model.scores(s.observations());
    Ok(mean(scores.iter().zip(s.labels()).map(|(&z, &y)| loss.eval(y * z)), s.len()))
}

/// Label-free term: the mean loss over all `2m` rows of the doubled sample.
pub fn doubled_risk<T: Scalar>(s2x: &DoubledSample<T>, loss: &LossSpec<T>, model: &Model<T>) -> Result<T> {
    check_dim(s2x.dim(), model.dim())?;
    let scores = model.scores(s2x.observations());
    Ok(mean(scores.iter().zip(s2x.signs()).map(|(&z, &sg)| loss.eval(sg * z)), s2x.len()))
}

/// Factored risk `E_{S2x}[l(sigma <theta, x>)] + a <theta, mu>` of a linear-odd
/// loss. Equals [`empirical_risk`] when `mu` is the exact mean operator.
pub fn factored_risk<T: Scalar>(
    s2x: &DoubledSample<T>,
    mu: &MeanOperator<T>,
    loss: &LossSpec<T>,
    model: &Model<T>,
) -> Result<T> {
    let a = loss.require_odd_slope()?;
    check_dim(s2x.dim(), mu.dim())?;
    Ok(doubled_risk(s2x, loss, model)? + a * model.theta().dot(&mu.vector()))
}

/// [`factored_risk`] evaluated on an estimate of the mean operator.
pub fn estimated_risk<T: Scalar>(
    s2x: &DoubledSample<T>,
    mu_hat: &MeanOperator<T>,
    loss: &LossSpec<T>,
    model: &Model<T>,
) -> Result<T> {
    factored_risk(s2x, mu_hat, loss, model)
}

/// Gradient of [`factored_risk`] in `theta`, using the loss subgradient.
pub fn factored_gradient<T: Scalar>(
    s2x: &DoubledSample<T>,
    mu: ArrayView1<'_, T>,
    a: T,
    loss: &LossSpec<T>,
    theta: ArrayView1<'_, T>,
) -> Array1<T> {
    let scores = s2x.observations().dot(&theta);
    let coef: Array1<T> = scores
        .iter()
        .zip(s2x.signs())
        .map(|(&z, &sg)| loss.subgrad(sg * z) * sg)
        .collect();
    let g = s2x.observations().t().dot(&coef) / T::from_usize_lossy(s2x.len());
    g + &mu * a
}

/// Even/odd split of the empirical risk valid for any margin loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factorization<T> {
    /// `1/2 E_S[l(<theta, x>) + l(-<theta, x>)]`, label-free.
    pub even_term: T,
    /// `E_S[l_o(y <theta, x>)]`.
    pub odd_term: T,
}

impl<T: Scalar> Factorization<T> {
    pub fn total(&self) -> T {
        self.even_term + self.odd_term
    }
}

pub fn general_factored_risk<T: Scalar>(s: &Sample<T>, loss: &LossSpec<T>, model: &Model<T>) -> Result<Factorization<T>> {
    check_dim(s.dim(), model.dim())?;
    let scores = model.scores(s.observations());
    let half = T::lit(0.5);
    let even_term = mean(scores.iter().map(|&z| half * (loss.eval(z) + loss.eval(-z))), s.len());
    let odd = scores
        .iter()
        .zip(s.labels())
        .map(|(&z, &y)| odd_part(loss, y * z))
        .collect::<Result<Vec<T>>>()?;
    Ok(Factorization { even_term, odd_term: mean(odd.into_iter(), s.len()) })
}

/// Both sides of the square-loss regression identity
/// `E[(<theta,x> - y)^2] = E[<theta,x>^2] + E[y^2] - 2 <theta, E[y x]>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressionIdentity<T> {
    pub lhs: T,
    pub rhs: T,
}

pub fn regression_factored_objective<T: Scalar>(
    obs: ArrayView2<'_, T>,
    targets: ArrayView1<'_, T>,
    theta: ArrayView1<'_, T>,
) -> Result<RegressionIdentity<T>> {
    check_dim(obs.nrows(), targets.len())?;
    check_dim(obs.ncols(), theta.len())?;
    let m = obs.nrows();
    if m == 0 {
        return Err(Error::InvalidSample("no rows".into()));
    }
    let scores = obs.dot(&theta);
    let lhs = mean(scores.iter().zip(targets).map(|(&z, &y)| (z - y) * (z - y)), m);
    let mu = obs.t().dot(&targets) / T::from_usize_lossy(m);
    let rhs = mean(scores.iter().map(|&z| z * z), m) + mean(targets.iter().map(|&y| y * y), m)
        - T::lit(2.0) * theta.dot(&mu);
    Ok(RegressionIdentity { lhs, rhs })
}

/// Expected risk when each label of `s` is flipped with its class rate:
/// `E_S[(1 - p_y) l(y <theta,x>) + p_y l(-y <theta,x>)]`, computed exactly.
pub fn noisy_expected_risk<T: Scalar>(
    s: &Sample<T>,
    loss: &LossSpec<T>,
    model: &Model<T>,
    noise: &NoiseSpec,
) -> Result<T> {
    check_dim(s.dim(), model.dim())?;
    let scores = model.scores(s.observations());
    Ok(mean(
        scores.iter().zip(s.labels()).map(|(&z, &y)| {
            let p = T::lit(noise.rate_for(y));
            (T::one() - p) * loss.eval(y * z) + p * loss.eval(-y * z)
        }),
        s.len(),
    ))
}

/// Fraction of rows where `sign(<theta, x>)` disagrees with the label; a zero
/// score predicts `+1`.
pub fn zero_one_error<T: Scalar>(s: &Sample<T>, model: &Model<T>) -> Result<f64> {
    check_dim(s.dim(), model.dim())?;
    let scores = model.scores(s.observations());
    let wrong = scores
        .iter()
        .zip(s.labels())
        .filter(|(&z, &y)| (z >= T::zero()) != (y > T::zero()))
        .count();
    Ok(wrong as f64 / s.len() as f64)
}
