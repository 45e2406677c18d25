//! Projected stochastic solvers on the factored objective, a plain SGD
//! baseline, a proximal variant and exact minimizers used as references.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gram, min_eigenvalue, solve_spd};
use crate::loss::LossSpec;
use crate::mean_op::{noise_corrected_mean_op, MeanOperator};
use crate::risk::{factored_gradient, Model};
use crate::sample::{double_sample, DoubledSample, NoiseSpec, Sample};
use crate::scalar::Scalar;

/// Weight of the mean-operator term in each stochastic step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Step along `v + a mu / 2`.
    #[default]
    PaperFaithful,
    /// Step along `v + a mu`, an unbiased estimate of the gradient of the
    /// factored risk.
    RiskConsistent,
}

impl UpdateMode {
    fn mu_weight<T: Scalar>(self) -> T {
        match self {
            UpdateMode::PaperFaithful => T::lit(0.5),
            UpdateMode::RiskConsistent => T::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig<T: Scalar> {
    lambda: T,
    iterations: usize,
    seed: u64,
    update_mode: UpdateMode,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(lambda: T, iterations: usize, seed: u64) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        if iterations == 0 {
            return Err(Error::InvalidArgument("iteration count must be positive".into()));
        }
        Ok(SolverConfig { lambda, iterations, seed, update_mode: UpdateMode::default() })
    }

    /// `epochs` passes over a doubled sample built from `m` observations,
    /// i.e. `T = epochs * 2m` steps.
    pub fn from_epochs(lambda: T, epochs: usize, m: usize, seed: u64) -> Result<Self> {
        Self::new(lambda, epochs * 2 * m, seed)
    }

    pub fn with_update_mode(mut self, mode: UpdateMode) -> Self {
        self.update_mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn update_mode(&self) -> UpdateMode {
        self.update_mode
    }

    /// Radius `1 / sqrt(lambda)` of the feasible ball.
    pub fn radius(&self) -> T {
        self.lambda.sqrt().recip()
    }
}

fn project<T: Scalar>(theta: &mut Array1<T>, radius: T) {
    let norm = theta.dot(theta).sqrt();
    if norm > radius {
        *theta *= radius / norm;
    }
}

/// Row-sampled projected subgradient iteration shared by the solvers.
///
/// `direction(theta, row, out)` writes the stochastic direction into `out`.
fn projected_sgd<T, D, O>(d: usize, rows: usize, cfg: &SolverConfig<T>, mut direction: D, mut observe: O) -> Array1<T>
where
    T: Scalar,
    D: FnMut(ArrayView1<'_, T>, usize, &mut Array1<T>),
    O: FnMut(usize, ArrayView1<'_, T>),
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = Array1::<T>::zeros(d);
    let mut dir = Array1::<T>::zeros(d);
    let radius = cfg.radius();
    for t in 1..=cfg.iterations {
        let row = rng.random_range(0..rows);
        let eta = (T::one() + cfg.lambda * T::from_usize_lossy(t)).recip();
        direction(theta.view(), row, &mut dir);
        Zip::from(&mut theta)
            .and(&dir)
            .for_each(|th, &g| *th = (T::one() - eta * cfg.lambda) * *th - eta * g);
        project(&mut theta, radius);
        debug_assert!(theta.dot(&theta).sqrt() <= radius * (T::one() + T::lit(1e-12).max(T::epsilon() * T::lit(4.0))));
        observe(t, theta.view());
    }
    theta
}

/// The stochastic direction taken from `theta` when row `row` of the doubled
/// sample is drawn: `l'(s <theta,x>) s x + w a mu`, with `w` set by `mode`.
pub fn stochastic_direction<T: Scalar>(
    s2x: &DoubledSample<T>,
    mu: ArrayView1<'_, T>,
    loss: &LossSpec<T>,
    a: T,
    theta: ArrayView1<'_, T>,
    row: usize,
    mode: UpdateMode,
) -> Array1<T> {
    let obs = s2x.observations();
    let x = obs.row(row);
    let sg = s2x.signs()[row];
    let slope = loss.subgrad(sg * x.dot(&theta)) * sg;
    &x * slope + &mu * (a * mode.mu_weight::<T>())
}

fn check_inputs<T: Scalar>(s2x: &DoubledSample<T>, mu: &MeanOperator<T>, loss: &LossSpec<T>) -> Result<T> {
    let a = loss.require_odd_slope()?;
    if mu.dim() != s2x.dim() {
        return Err(Error::DimensionMismatch { expected: s2x.dim(), found: mu.dim() });
    }
    Ok(a)
}

/// Projected stochastic subgradient descent on the factored objective, fed
/// the doubled sample and a mean-operator estimate.
pub fn mosgd_train<T: Scalar>(
    s2x: &DoubledSample<T>,
    mu: &MeanOperator<T>,
    loss: &LossSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<Model<T>> {
    mosgd_train_observed(s2x, mu, loss, cfg, |_, _| {})
}

/// [`mosgd_train`] calling `observe(t, theta_t)` after every step.
pub fn mosgd_train_observed<T, O>(
    s2x: &DoubledSample<T>,
    mu: &MeanOperator<T>,
    loss: &LossSpec<T>,
    cfg: &SolverConfig<T>,
    observe: O,
) -> Result<Model<T>>
where
    T: Scalar,
    O: FnMut(usize, ArrayView1<'_, T>),
{
    let a = check_inputs(s2x, mu, loss)?;
    let shift = mu.vector().to_owned() * (a * cfg.update_mode.mu_weight::<T>());
    let obs = s2x.observations();
    let signs = s2x.signs();
    let theta = projected_sgd(
        s2x.dim(),
        s2x.len(),
        cfg,
        |theta, row, out| {
            let x = obs.row(row);
            let sg = signs[row];
            let slope = loss.subgrad(sg * x.dot(&theta)) * sg;
            Zip::from(out).and(&x).and(&shift).for_each(|o, &xi, &s| *o = slope * xi + s);
        },
        observe,
    );
    Model::with_cap(theta, cfg.radius())
}

/// Learning from labels corrupted with known class-conditional rates: the
/// mean operator is replaced by its noise-corrected estimate.
pub fn mosgd_noisy<T: Scalar>(noisy: &Sample<T>, loss: &LossSpec<T>, noise: &NoiseSpec, cfg: &SolverConfig<T>) -> Result<Model<T>> {
    let s2x = double_sample(noisy);
    let mu = noise_corrected_mean_op(noisy, noise);
    mosgd_train(&s2x, &mu, loss, cfg)
}

/// Projected stochastic subgradient descent on the regularized empirical
/// risk, sampling rows of `s` directly.
pub fn sgd_baseline<T: Scalar>(s: &Sample<T>, loss: &LossSpec<T>, cfg: &SolverConfig<T>) -> Result<Model<T>> {
    sgd_baseline_observed(s, loss, cfg, |_, _| {})
}

pub fn sgd_baseline_observed<T, O>(s: &Sample<T>, loss: &LossSpec<T>, cfg: &SolverConfig<T>, observe: O) -> Result<Model<T>>
where
    T: Scalar,
    O: FnMut(usize, ArrayView1<'_, T>),
{
    let obs = s.observations();
    let labels = s.labels();
    let theta = projected_sgd(
        s.dim(),
        s.len(),
        cfg,
        |theta, row, out| {
            let x = obs.row(row);
            let y = labels[row];
            let slope = loss.subgrad(y * x.dot(&theta)) * y;
            Zip::from(out).and(&x).for_each(|o, &xi| *o = slope * xi);
        },
        observe,
    );
    Model::with_cap(theta, cfg.radius())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularizer<T> {
    /// `(lambda / 2) ||theta||^2`
    L2(T),
    /// `lambda ||theta||_1`
    L1(T),
}

impl<T: Scalar> Regularizer<T> {
    /// Proximal map of `eta` times the regularizer.
    pub fn prox(&self, v: &mut Array1<T>, eta: T) {
        match *self {
            Regularizer::L2(lambda) => *v /= T::one() + eta * lambda,
            Regularizer::L1(lambda) => {
                let k = eta * lambda;
                v.mapv_inplace(|x| x.signum() * (x.abs() - k).max(T::zero()));
            }
        }
    }
}

/// Full-batch proximal gradient descent on the factored objective:
/// `theta <- prox(theta - eta (g + w a mu))`, `g` the mean subgradient over
/// the doubled sample and `w` set by `mode`.
pub fn prox_train<T: Scalar>(
    s2x: &DoubledSample<T>,
    mu: &MeanOperator<T>,
    loss: &LossSpec<T>,
    reg: Regularizer<T>,
    eta: T,
    iterations: usize,
    mode: UpdateMode,
) -> Result<Model<T>> {
    let a = check_inputs(s2x, mu, loss)?;
    if !(eta > T::zero()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {eta}")));
    }
    let mut theta = Array1::<T>::zeros(s2x.dim());
    let w = mode.mu_weight::<T>();
    for _ in 0..iterations {
        let g = factored_gradient(s2x, mu.vector(), a * w, loss, theta.view());
        theta.scaled_add(-eta, &g);
        reg.prox(&mut theta, eta);
    }
    Ok(Model::new(theta))
}

/// `E_S[(1 - 2 p_y) y x]`: the mean operator of the expected noisy labels.
pub fn expected_noisy_mean<T: Scalar>(s: &Sample<T>, noise: &NoiseSpec) -> Array1<T> {
    let w = s.labels().mapv(|y| (T::one() - T::lit(2.0 * noise.rate_for(y))) * y);
    s.observations().t().dot(&w) / T::from_usize_lossy(s.len())
}

/// Minimizer of `1 + theta' C theta - 2 <theta, mu> + (lambda / 2) ||theta||^2`
/// with `C` the second-moment matrix: solves `(2C + lambda I) theta = 2 mu`.
pub fn exact_minimizer_square_moments<T: Scalar>(c: ArrayView2<'_, T>, mu: ArrayView1<'_, T>, lambda: T) -> Result<Model<T>> {
    if lambda < T::zero() {
        return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
    }
    let d = mu.len();
    let two = T::lit(2.0);
    let h = Array2::from_shape_fn((d, d), |(i, j)| two * c[[i, j]] + if i == j { lambda } else { T::zero() });
    Ok(Model::new(solve_spd(h.view(), (&mu * two).view())?))
}

/// Exact minimizer of the regularized square-loss risk on `s`.
pub fn exact_minimizer_square<T: Scalar>(s: &Sample<T>, lambda: T) -> Result<Model<T>> {
    let mu = crate::mean_op::mean_op(s).into_vector();
    exact_minimizer_square_moments(gram(s.observations()).view(), mu.view(), lambda)
}

/// Exact minimizer of the regularized square-loss risk expected under label
/// noise `noise` applied to `s`.
pub fn exact_minimizer_square_noisy<T: Scalar>(s: &Sample<T>, noise: &NoiseSpec, lambda: T) -> Result<Model<T>> {
    let mu = expected_noisy_mean(s, noise);
    exact_minimizer_square_moments(gram(s.observations()).view(), mu.view(), lambda)
}

/// Gradient `2 C theta - 2 mu + lambda theta` of the regularized square objective.
pub fn square_objective_gradient<T: Scalar>(s: &Sample<T>, theta: ArrayView1<'_, T>, lambda: T) -> Array1<T> {
    let mu = crate::mean_op::mean_op(s).into_vector();
    let two = T::lit(2.0);
    gram(s.observations()).dot(&theta) * two - mu * two + &theta * lambda
}

/// Strong-convexity modulus `2 lambda_min(C) + lambda` of the regularized
/// square objective (clean or noisy: the Hessian is label-free).
pub fn square_strong_convexity<T: Scalar>(s: &Sample<T>, lambda: T) -> Result<f64> {
    Ok(2.0 * min_eigenvalue(gram(s.observations()).view())?.max(0.0) + lambda.as_f64())
}

/// Outcome of [`minimize_regularized`].
#[derive(Clone, Debug)]
pub struct Minimization<T: Scalar> {
    pub model: Model<T>,
    pub objective: T,
    pub grad_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

struct WeightedObjective<'a, T: Scalar> {
    obs: ArrayView2<'a, T>,
    /// Per row: `(weight, sign)` pairs; the row contributes
    /// `sum weight * l(sign <theta, x>)`.
    terms: Vec<[(T, T); 2]>,
    loss: &'a LossSpec<T>,
    lambda: T,
}

impl<T: Scalar> WeightedObjective<'_, T> {
    fn m(&self) -> T {
        T::from_usize_lossy(self.obs.nrows())
    }

    fn value(&self, theta: ArrayView1<'_, T>) -> T {
        let z = self.obs.dot(&theta);
        let data: T = z
            .iter()
            .zip(&self.terms)
            .map(|(&zi, t)| t.iter().map(|&(w, s)| if w == T::zero() { T::zero() } else { w * self.loss.eval(s * zi) }).sum::<T>())
            .sum();
        data / self.m() + T::lit(0.5) * self.lambda * theta.dot(&theta)
    }

    fn gradient(&self, theta: ArrayView1<'_, T>) -> Array1<T> {
        let z = self.obs.dot(&theta);
        let coef: Array1<T> = z
            .iter()
            .zip(&self.terms)
            .map(|(&zi, t)| t.iter().map(|&(w, s)| w * s * self.loss.subgrad(s * zi)).sum::<T>())
            .collect();
        self.obs.t().dot(&coef) / self.m() + &theta * self.lambda
    }

    fn hessian(&self, theta: ArrayView1<'_, T>) -> Option<Array2<T>> {
        let z = self.obs.dot(&theta);
        let mut curv = Vec::with_capacity(z.len());
        for (&zi, t) in z.iter().zip(&self.terms) {
            let mut c = T::zero();
            for &(w, s) in t {
                c += w * self.loss.curvature(s * zi)?;
            }
            curv.push(c);
        }
        let weighted = Array2::from_shape_fn(self.obs.dim(), |(i, j)| self.obs[[i, j]] * curv[i]);
        let mut h = self.obs.t().dot(&weighted) / self.m();
        for i in 0..h.nrows() {
            h[[i, i]] += self.lambda;
        }
        Some(h)
    }
}

/// Minimizes `E[(1 - p_y) l(y <theta,x>) + p_y l(-y <theta,x>)] + (lambda/2) ||theta||^2`
/// over `s` to gradient norm `tol`, where `p_y` comes from `noise` (use
/// [`NoiseSpec::clean`] for the plain regularized risk). Damped Newton is used
/// when the loss has a curvature, gradient descent with backtracking otherwise.
pub fn minimize_regularized<T: Scalar>(
    s: &Sample<T>,
    loss: &LossSpec<T>,
    noise: &NoiseSpec,
    lambda: T,
    tol: T,
    max_iter: usize,
) -> Result<Minimization<T>> {
    if !loss.is_convex() {
        return Err(Error::InvalidArgument(format!("loss `{}` is not convex", loss.name())));
    }
    if !(lambda > T::zero()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let terms = s
        .labels()
        .iter()
        .map(|&y| {
            let p = T::lit(noise.rate_for(y));
            [(T::one() - p, y), (p, -y)]
        })
        .collect();
    let obj = WeightedObjective { obs: s.observations(), terms, loss, lambda };

    let mut theta = Array1::<T>::zeros(s.dim());
    let mut f = obj.value(theta.view());
    let mut g = obj.gradient(theta.view());
    let mut gnorm = g.dot(&g).sqrt();
    let mut step = T::one();
    let c1 = T::lit(1e-4);
    let mut iterations = 0;
    while iterations < max_iter && gnorm > tol {
        iterations += 1;
        let newton = obj.hessian(theta.view()).and_then(|h| solve_spd(h.view(), g.view()).ok());
        let is_newton = newton.is_some();
        let (dir, mut t) = match newton {
            Some(dir) => (dir, T::one()),
            None => (g.clone(), (step * T::lit(2.0)).min(T::lit(1e6))),
        };
        let slope = g.dot(&dir);
        // near the optimum a Newton step's decrease drops below the rounding
        // error of the objective; allow that much slack
        let slack = if is_newton { T::lit(4.0) * T::epsilon() * f.abs() } else { T::zero() };
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &theta - &(&dir * t);
            let fc = obj.value(cand.view());
            if fc <= f - c1 * t * slope + slack {
                theta = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
        step = t;
        g = obj.gradient(theta.view());
        gnorm = g.dot(&g).sqrt();
    }
    Ok(Minimization { model: Model::new(theta), objective: f, grad_norm: gnorm, iterations, converged: gnorm <= tol })
}
