//! Margin losses and their even/odd decomposition.
//!
//! Every margin loss splits uniquely into an even part
//! `l_e(x) = (l(x) + l(-x)) / 2` and an odd part `l_o(x) = (l(x) - l(-x)) / 2`.
//! A loss is *a-linear-odd* when `l_o(x) = a x` for a constant `a`; for those
//! losses the label information of a sample enters the empirical risk only
//! through the mean operator (see [`crate::risk`]).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shared scalar map.
pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Grid on which linear-oddness is decided.
pub const LOL_GRID: [f64; 12] = [
    -10.0, -5.0, -2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0,
];

/// Abscissae used to estimate the asymptotic slopes of a loss.
const ASYMPTOTE_NEAR: f64 = 1e3;
const ASYMPTOTE_FAR: f64 = 1e4;

/// A margin loss `l(y <theta, x>)` together with the metadata the solvers
/// and bound calculators need.
#[derive(Clone)]
pub struct LossSpec<T: Scalar> {
    name: String,
    eval: ScalarFn<T>,
    subgrad: ScalarFn<T>,
    curvature: Option<ScalarFn<T>>,
    odd_slope: Option<T>,
    lipschitz: Option<T>,
    strong_convexity: Option<T>,
    convex: bool,
    closed_form_bound: Option<AffineBound<T>>,
}

impl<T: Scalar> fmt::Debug for LossSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossSpec")
            .field("name", &self.name)
            .field("odd_slope", &self.odd_slope)
            .field("lipschitz", &self.lipschitz)
            .field("strong_convexity", &self.strong_convexity)
            .field("convex", &self.convex)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> LossSpec<T> {
    /// A loss with no metadata attached. `subgrad` must return one element of
    /// the subdifferential at every point.
    pub fn new<F, G>(name: impl Into<String>, eval: F, subgrad: G) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
        G: Fn(T) -> T + Send + Sync + 'static,
    {
        LossSpec {
            name: name.into(),
            eval: Arc::new(eval),
            subgrad: Arc::new(subgrad),
            curvature: None,
            odd_slope: None,
            lipschitz: None,
            strong_convexity: None,
            convex: false,
            closed_form_bound: None,
        }
    }

    pub fn with_odd_slope(mut self, a: T) -> Self {
        self.odd_slope = Some(a);
        self
    }

    pub fn with_lipschitz(mut self, l: T) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_strong_convexity(mut self, gamma: T) -> Self {
        self.strong_convexity = Some(gamma);
        self
    }

    pub fn with_convexity(mut self, convex: bool) -> Self {
        self.convex = convex;
        self
    }

    /// Second derivative, for losses that are twice differentiable.
    pub fn with_curvature<H>(mut self, curvature: H) -> Self
    where
        H: Fn(T) -> T + Send + Sync + 'static,
    {
        self.curvature = Some(Arc::new(curvature));
        self
    }

    fn with_closed_form_bound(mut self, bound: AffineBound<T>) -> Self {
        self.closed_form_bound = Some(bound);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        (self.eval)(x)
    }

    #[inline]
    pub fn subgrad(&self, x: T) -> T {
        (self.subgrad)(x)
    }

    #[inline]
    pub fn curvature(&self, x: T) -> Option<T> {
        self.curvature.as_ref().map(|h| h(x))
    }

    pub fn is_twice_differentiable(&self) -> bool {
        self.curvature.is_some()
    }

    /// The slope `a` of the odd part, present iff the loss is a-linear-odd.
    pub fn odd_slope(&self) -> Option<T> {
        self.odd_slope
    }

    /// Like [`odd_slope`](Self::odd_slope) but fails for non-LOL losses.
    pub fn require_odd_slope(&self) -> Result<T> {
        self.odd_slope
            .ok_or_else(|| Error::NotLinearOdd(self.name.clone()))
    }

    pub fn lipschitz(&self) -> Option<T> {
        self.lipschitz
    }

    pub fn strong_convexity(&self) -> Option<T> {
        self.strong_convexity
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }
}

/// Affine majorant `slope * x + intercept` of the odd part of a loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineBound<T> {
    pub slope: T,
    pub intercept: T,
    /// `true` when derived analytically rather than from a grid supremum.
    pub exact: bool,
}

impl<T: Scalar> AffineBound<T> {
    pub fn value(&self, x: T) -> T {
        self.slope * x + self.intercept
    }
}

fn check_finite<T: Scalar>(x: T) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(x.as_f64()))
    }
}

/// `(l(x) - l(-x)) / 2`.
pub fn odd_part<T: Scalar>(loss: &LossSpec<T>, x: T) -> Result<T> {
    check_finite(x)?;
    Ok((loss.eval(x) - loss.eval(-x)) / T::lit(2.0))
}

/// `(l(x) + l(-x)) / 2`.
pub fn even_part<T: Scalar>(loss: &LossSpec<T>, x: T) -> Result<T> {
    check_finite(x)?;
    // Sum in a fixed order so that even_part(x) == even_part(-x) bitwise.
    let (p, n) = (loss.eval(x.abs()), loss.eval(-x.abs()));
    Ok((p + n) / T::lit(2.0))
}

/// Decides whether `l_o(x) / x` is constant over `grid`; returns that constant.
///
/// The grid must hold at least 8 nonzero points of both signs.
pub fn lol_slope_check<T: Scalar>(loss: &LossSpec<T>, grid: &[T]) -> Result<Option<T>> {
    let nonzero: Vec<T> = grid.iter().copied().filter(|x| !x.is_zero()).collect();
    if nonzero.is_empty() {
        return Err(Error::DegenerateGrid("grid contains only zeros"));
    }
    if nonzero.len() < 8 {
        return Err(Error::DegenerateGrid("fewer than 8 nonzero points"));
    }
    let has_pos = nonzero.iter().any(|x| *x > T::zero());
    let has_neg = nonzero.iter().any(|x| *x < T::zero());
    if !(has_pos && has_neg) {
        return Err(Error::DegenerateGrid("grid does not span a sign change"));
    }
    let mut ratios = Vec::with_capacity(nonzero.len());
    for &x in &nonzero {
        ratios.push(odd_part(loss, x)? / x);
    }
    let reference = ratios[0];
    if !reference.is_finite() {
        return Ok(None);
    }
    let tol = T::lol_tolerance() * reference.abs().max(T::one());
    let linear = ratios.iter().all(|r| (*r - reference).abs() <= tol);
    Ok(linear.then_some(reference))
}

/// [`lol_slope_check`] on [`LOL_GRID`].
pub fn detect_odd_slope<T: Scalar>(loss: &LossSpec<T>) -> Option<T> {
    let grid: Vec<T> = LOL_GRID.iter().map(|&x| T::lit(x)).collect();
    lol_slope_check(loss, &grid).ok().flatten()
}

fn symmetry_grid<T: Scalar>() -> impl Iterator<Item = T> {
    (1..=200)
        .map(|k| k as f64 * 0.1)
        .chain([50.0, 100.0, 1e3])
        .map(T::lit)
}

fn check_even<T: Scalar>(even_fn: &dyn Fn(T) -> T) -> Result<()> {
    for x in symmetry_grid::<T>() {
        let (left, right) = (even_fn(x), even_fn(-x));
        let scale = left.abs().max(right.abs()).max(T::one());
        if !((left - right).abs() <= T::lol_tolerance() * scale) {
            return Err(Error::NotEven {
                x: x.as_f64(),
                left: left.as_f64(),
                right: right.as_f64(),
            });
        }
    }
    Ok(())
}

/// Builds the a-LOL `l(x) = even_fn(x) + a x`.
///
/// Subgradients are taken as right finite differences of `even_fn`; use
/// [`craft_lol_with_subgrad`] when the derivative is known.
pub fn craft_lol<T, F>(name: impl Into<String>, even_fn: F, a: T) -> Result<LossSpec<T>>
where
    T: Scalar,
    F: Fn(T) -> T + Send + Sync + 'static,
{
    let even_fn: ScalarFn<T> = Arc::new(even_fn);
    let right_diff = {
        let f = Arc::clone(&even_fn);
        move |x: T| {
            let h = T::epsilon().sqrt() * x.abs().max(T::one());
            (f(x + h) - f(x)) / h
        }
    };
    craft_inner(name.into(), even_fn, right_diff, a)
}

/// Builds the a-LOL `l(x) = even_fn(x) + a x` with a known subgradient of `even_fn`.
pub fn craft_lol_with_subgrad<T, F, G>(
    name: impl Into<String>,
    even_fn: F,
    even_subgrad: G,
    a: T,
) -> Result<LossSpec<T>>
where
    T: Scalar,
    F: Fn(T) -> T + Send + Sync + 'static,
    G: Fn(T) -> T + Send + Sync + 'static,
{
    craft_inner(name.into(), Arc::new(even_fn), even_subgrad, a)
}

fn craft_inner<T, G>(name: String, even_fn: ScalarFn<T>, even_subgrad: G, a: T) -> Result<LossSpec<T>>
where
    T: Scalar,
    G: Fn(T) -> T + Send + Sync + 'static,
{
    check_finite(a)?;
    check_even(even_fn.as_ref())?;
    let eval = move |x: T| even_fn(x) + a * x;
    let subgrad = move |x: T| even_subgrad(x) + a;
    Ok(LossSpec::new(name, eval, subgrad).with_odd_slope(a))
}

/// Affine upper bound on the odd part of a loss with asymptotes at both infinities.
///
/// The slope is the mean of the two asymptotic slopes, estimated by secants
/// at `|x| in {1e3, 1e4}`; the intercept is the supremum of
/// `l_o(x) - slope x` over `grid` and those four points. Losses carrying a
/// closed-form bound (hinge) return it unchanged.
pub fn affine_odd_bound<T: Scalar>(loss: &LossSpec<T>, grid: &[T]) -> Result<AffineBound<T>> {
    if let Some(bound) = loss.closed_form_bound {
        return Ok(bound);
    }
    let no_bound = || Error::NoAffineBound(loss.name().to_string());
    let (near, far) = (T::lit(ASYMPTOTE_NEAR), T::lit(ASYMPTOTE_FAR));
    let c_plus = (loss.eval(far) - loss.eval(near)) / (far - near);
    let c_minus = (loss.eval(-far) - loss.eval(-near)) / (near - far);
    if !(c_plus.is_finite() && c_minus.is_finite()) {
        return Err(no_bound());
    }
    let slope = (c_plus + c_minus) / T::lit(2.0);
    let mut intercept = T::neg_infinity();
    for &x in grid.iter().chain([near, far, -near, -far].iter()) {
        let gap = odd_part(loss, x)? - slope * x;
        if !gap.is_finite() {
            return Err(no_bound());
        }
        intercept = intercept.max(gap);
    }
    Ok(AffineBound {
        slope,
        intercept,
        exact: false,
    })
}

/// Evenly spaced grid of `n >= 2` points on `[lo, hi]`.
pub fn linear_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / T::from_usize_lossy(n - 1);
    (0..n).map(|k| lo + step * T::from_usize_lossy(k)).collect()
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `log(1 + e^{-x})`; 1/2-LOL with slope `-1/2`.
pub fn logistic<T: Scalar>() -> LossSpec<T> {
    LossSpec::new("logistic", |x: T| softplus(-x), |x: T| -sigmoid(-x))
        .with_curvature(|x: T| sigmoid(x) * sigmoid(-x))
        .with_odd_slope(T::lit(-0.5))
        .with_lipschitz(T::one())
        .with_convexity(true)
}

/// `(1 - x)^2`.
pub fn square<T: Scalar>() -> LossSpec<T> {
    let two = T::lit(2.0);
    LossSpec::new(
        "square",
        |x: T| (T::one() - x) * (T::one() - x),
        move |x: T| -two * (T::one() - x),
    )
    .with_curvature(move |_| two)
    .with_odd_slope(-two)
    .with_strong_convexity(two)
    .with_convexity(true)
}

/// `sqrt(1 + x^2) - x`.
pub fn matsushita<T: Scalar>() -> LossSpec<T> {
    LossSpec::new(
        "matsushita",
        |x: T| (T::one() + x * x).sqrt() - x,
        |x: T| x / (T::one() + x * x).sqrt() - T::one(),
    )
    .with_curvature(|x: T| (T::one() + x * x).powf(T::lit(-1.5)))
    .with_odd_slope(-T::one())
    .with_lipschitz(T::lit(2.0))
    .with_convexity(true)
}

/// `1 - x`.
pub fn unhinged<T: Scalar>() -> LossSpec<T> {
    LossSpec::new("unhinged", |x: T| T::one() - x, |_| -T::one())
        .with_curvature(|_| T::zero())
        .with_odd_slope(-T::one())
        .with_lipschitz(T::one())
        .with_convexity(true)
}

/// `max(0, -x)`.
pub fn perceptron<T: Scalar>() -> LossSpec<T> {
    LossSpec::new(
        "perceptron",
        |x: T| (-x).max(T::zero()),
        |x: T| if x < T::zero() { -T::one() } else { T::zero() },
    )
    .with_odd_slope(T::lit(-0.5))
    .with_lipschitz(T::one())
    .with_convexity(true)
}

/// `max(-x, max(0, 1 - x) / 2)`.
pub fn double_hinge<T: Scalar>() -> LossSpec<T> {
    let half = T::lit(0.5);
    LossSpec::new(
        "double_hinge",
        move |x: T| (-x).max(half * (T::one() - x).max(T::zero())),
        move |x: T| {
            if x < -T::one() {
                -T::one()
            } else if x < T::one() {
                -half
            } else {
                T::zero()
            }
        },
    )
    .with_odd_slope(-half)
    .with_lipschitz(T::one())
    .with_convexity(true)
}

/// `rho |x| - rho x + 1` for `rho >= 0`.
pub fn rho_loss<T: Scalar>(rho: T) -> Result<LossSpec<T>> {
    check_finite(rho)?;
    if rho < T::zero() {
        return Err(Error::InvalidArgument(format!("rho must be >= 0, got {rho}")));
    }
    let two_rho = T::lit(2.0) * rho;
    Ok(LossSpec::new(
        format!("rho:{rho}"),
        move |x: T| rho * x.abs() - rho * x + T::one(),
        move |x: T| if x < T::zero() { -two_rho } else { T::zero() },
    )
    .with_odd_slope(-rho)
    .with_lipschitz(two_rho)
    .with_convexity(true))
}

/// `1{x <= 0}`.
pub fn zero_one<T: Scalar>() -> LossSpec<T> {
    LossSpec::new(
        "zero_one",
        |x: T| if x <= T::zero() { T::one() } else { T::zero() },
        |_| T::zero(),
    )
}

/// `max(0, 1 - x)`.
pub fn hinge<T: Scalar>() -> LossSpec<T> {
    LossSpec::new(
        "hinge",
        |x: T| (T::one() - x).max(T::zero()),
        |x: T| if x < T::one() { -T::one() } else { T::zero() },
    )
    .with_lipschitz(T::one())
    .with_convexity(true)
    .with_closed_form_bound(AffineBound {
        slope: T::lit(-0.5),
        intercept: T::lit(0.5),
        exact: true,
    })
}

/// `e^{-x}`.
pub fn exponential<T: Scalar>() -> LossSpec<T> {
    LossSpec::new("exponential", |x: T| (-x).exp(), |x: T| -(-x).exp())
        .with_curvature(|x: T| (-x).exp())
        .with_convexity(true)
}

/// Huber penalty on the margin residual `1 - x` with threshold `delta > 0`.
pub fn huber<T: Scalar>(delta: T) -> Result<LossSpec<T>> {
    check_finite(delta)?;
    if delta <= T::zero() {
        return Err(Error::InvalidArgument(format!("huber delta must be > 0, got {delta}")));
    }
    let half = T::lit(0.5);
    Ok(LossSpec::new(
        format!("huber:{delta}"),
        move |x: T| {
            let r = T::one() - x;
            if r.abs() <= delta {
                half * r * r
            } else {
                delta * (r.abs() - half * delta)
            }
        },
        move |x: T| -(T::one() - x).max(-delta).min(delta),
    )
    .with_lipschitz(delta)
    .with_convexity(true))
}

/// The ten named losses: seven linear-odd ones (`rho` with `rho = 1`)
/// followed by zero-one, hinge and exponential.
pub fn catalog<T: Scalar>() -> Vec<LossSpec<T>> {
    vec![
        logistic(),
        square(),
        matsushita(),
        unhinged(),
        perceptron(),
        double_hinge(),
        rho_loss(T::one()).expect("rho = 1 is valid"),
        zero_one(),
        hinge(),
        exponential(),
    ]
}

/// Resolves a stable loss identifier: `logistic`, `square`, `matsushita`,
/// `unhinged`, `perceptron`, `double_hinge`, `rho:<value>`, `zero_one`,
/// `hinge`, `exponential`, or `huber:<delta>`.
pub fn loss_by_name<T: Scalar>(name: &str) -> Result<LossSpec<T>> {
    let parse_param = |raw: &str| -> Result<T> {
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(T::lit)
            .ok_or_else(|| Error::InvalidArgument(format!("bad loss parameter `{raw}`")))
    };
    match name {
        "logistic" => Ok(logistic()),
        "square" => Ok(square()),
        "matsushita" => Ok(matsushita()),
        "unhinged" => Ok(unhinged()),
        "perceptron" => Ok(perceptron()),
        "double_hinge" => Ok(double_hinge()),
        "rho" => rho_loss(T::one()),
        "zero_one" => Ok(zero_one()),
        "hinge" => Ok(hinge()),
        "exponential" => Ok(exponential()),
        _ => {
            if let Some(raw) = name.strip_prefix("rho:") {
                rho_loss(parse_param(raw)?)
            } else if let Some(raw) = name.strip_prefix("huber:") {
                huber(parse_param(raw)?)
            } else {
                Err(Error::InvalidArgument(format!("unknown loss `{name}`")))
            }
        }
    }
}
