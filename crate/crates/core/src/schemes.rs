//! Block update schemes: exact and proximal block minimization, prox-linear
//! steps (plain, extrapolated, stochastic) and variance-reduced gradient
//! estimators.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Error, Result};
use crate::numeric::norm_sq;
use crate::prox::Regularizer;
use crate::scalar::Scalar;

/// `F(x) = f(x) + Σ_i r_i(x_i)` split into blocks.
pub trait CompositeProblem<T: Scalar> {
    fn num_blocks(&self) -> usize;

    fn block(&self, i: usize) -> Vec<T>;

    /// Overwrites block `i` and refreshes any maintained caches.
    fn set_block(&mut self, i: usize, value: &[T]) -> Result<()>;

    /// `∇_i f(x)` at the current point.
    fn block_gradient(&self, i: usize) -> Result<Vec<T>>;

    /// Lipschitz constant of `∇_i f` in block `i`.
    fn block_lipschitz(&self, i: usize) -> T;

    fn block_regularizer(&self, i: usize) -> Regularizer<T>;

    fn objective(&self) -> T;

    /// `argmin_{x_i} F(x_i, x_{≠i}) + (prox_weight/2)‖x_i − x_i^{old}‖²`.
    fn block_argmin(&self, i: usize, prox_weight: T) -> Result<Vec<T>> {
        let _ = prox_weight;
        Err(Error::UnsupportedScheme(format!(
            "no exact minimizer for block {i}"
        )))
    }
}

/// Smooth part written as an average `f = (1/m) Σ_j f_j`.
pub trait FiniteSum<T: Scalar>: CompositeProblem<T> {
    fn num_samples(&self) -> usize;

    /// Full variable vector.
    fn point(&self) -> Vec<T>;

    /// Position of block `i` inside [`FiniteSum::point`].
    fn block_range(&self, i: usize) -> Range<usize>;

    /// `∇f_j(point)` over all variables.
    fn sample_gradient(&self, j: usize, point: &[T]) -> Result<Vec<T>>;

    /// Lipschitz constant of `∇f_j`.
    fn sample_lipschitz(&self, j: usize) -> T;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    ExactMin,
    ProximalPoint,
    ProxLinear,
    ProxLinearExtrapolated,
    StochasticProxLinear,
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(
            match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
                "exact" | "exact-min" => SchemeKind::ExactMin,
                "proximal" | "proximal-point" => SchemeKind::ProximalPoint,
                "prox-linear" | "proxlinear" => SchemeKind::ProxLinear,
                "extrapolated" | "prox-linear-extrapolated" => SchemeKind::ProxLinearExtrapolated,
                "stochastic" | "stochastic-prox-linear" => SchemeKind::StochasticProxLinear,
                other => return Err(Error::UnsupportedScheme(other.to_string())),
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy<T> {
    Fixed(T),
    BlockLipschitzReciprocal,
    Armijo {
        sigma: T,
        backtrack: T,
        max_trials: usize,
    },
}

impl<T: Scalar> StepPolicy<T> {
    /// Backtracking defaults used by the logistic solver.
    pub fn armijo_default() -> Self {
        StepPolicy::Armijo {
            sigma: T::of(0.01),
            backtrack: T::half(),
            max_trials: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrMode {
    None,
    Sag,
    Saga,
    /// Anchor refreshed every `update_period` epochs.
    Svrg {
        update_period: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig<T> {
    pub scheme: SchemeKind,
    pub step_policy: StepPolicy<T>,
    pub omega: T,
    pub vr_mode: VrMode,
    pub batch_size: usize,
    /// Weight of the proximal term for [`SchemeKind::ProximalPoint`].
    pub prox_weight: T,
}

impl<T: Scalar> Default for SchemeConfig<T> {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::ProxLinear,
            step_policy: StepPolicy::BlockLipschitzReciprocal,
            omega: T::zero(),
            vr_mode: VrMode::None,
            batch_size: 1,
            prox_weight: T::one(),
        }
    }
}

impl<T: Scalar> SchemeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= T::zero()) {
            return Err(Error::InvalidWeight(self.omega.to_f64_lossy()));
        }
        match self.step_policy {
            StepPolicy::Fixed(a) if !(a > T::zero()) => {
                return Err(Error::InvalidStep(a.to_f64_lossy()))
            }
            StepPolicy::Armijo {
                sigma,
                backtrack,
                max_trials,
            } => {
                if !(sigma > T::zero() && sigma < T::one()) {
                    return Err(Error::InvalidParameter(format!(
                        "Armijo sigma {sigma} not in (0,1)"
                    )));
                }
                if !(backtrack > T::zero() && backtrack < T::one()) || max_trials == 0 {
                    return Err(Error::InvalidParameter(
                        "Armijo backtracking must shrink the step".into(),
                    ));
                }
            }
            _ => {}
        }
        if self.batch_size == 0 {
            return Err(Error::EmptyBatch);
        }
        if let VrMode::Svrg { update_period: 0 } = self.vr_mode {
            return Err(Error::InvalidParameter(
                "SVRG update period must be at least 1".into(),
            ));
        }
        if self.scheme == SchemeKind::ProximalPoint && !(self.prox_weight > T::zero()) {
            return Err(Error::InvalidStep(self.prox_weight.to_f64_lossy()));
        }
        Ok(())
    }
}

fn check_block<T: Scalar, P: CompositeProblem<T> + ?Sized>(problem: &P, i: usize) -> Result<()> {
    let s = problem.num_blocks();
    if i >= s {
        return Err(Error::IndexOutOfRange { index: i, len: s });
    }
    Ok(())
}

/// Exact (`prox_weight = 0`) or proximal-point block minimization; the result
/// is written back into the problem and returned.
pub fn coordinate_argmin_step<T: Scalar, P: CompositeProblem<T> + ?Sized>(
    problem: &mut P,
    i: usize,
    prox_weight: T,
) -> Result<Vec<T>> {
    check_block(problem, i)?;
    if !(prox_weight >= T::zero()) {
        return Err(Error::InvalidStep(prox_weight.to_f64_lossy()));
    }
    if prox_weight.is_infinite() {
        return Ok(problem.block(i));
    }
    let xi = problem.block_argmin(i, prox_weight)?;
    problem.set_block(i, &xi)?;
    Ok(xi)
}

/// `prox_{α r_i}(x_i − α g)` for a given block gradient `g`.
pub fn prox_linear_point<T: Scalar>(
    reg: &Regularizer<T>,
    xi: &[T],
    grad: &[T],
    alpha: T,
) -> Result<Vec<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::InvalidStep(alpha.to_f64_lossy()));
    }
    if xi.len() != grad.len() {
        return Err(shape_err(xi.len(), grad.len()));
    }
    let y: Vec<T> = xi.iter().zip(grad).map(|(&x, &g)| x - alpha * g).collect();
    reg.prox(&y, alpha)
}

/// Prox-linear block update `x_i ← prox_{α r_i}(x_i − α ∇_i f(x))`.
pub fn prox_linear_step<T: Scalar, P: CompositeProblem<T> + ?Sized>(
    problem: &mut P,
    i: usize,
    alpha: T,
) -> Result<Vec<T>> {
    check_block(problem, i)?;
    if !(alpha > T::zero()) {
        return Err(Error::InvalidStep(alpha.to_f64_lossy()));
    }
    let g = problem.block_gradient(i)?;
    let xi = problem.block(i);
    let new = prox_linear_point(&problem.block_regularizer(i), &xi, &g, alpha)?;
    problem.set_block(i, &new)?;
    Ok(new)
}

/// Prox-linear step whose step size backtracks from `alpha0` until
/// `F(x⁺) ≤ F(x) − (σ/α)‖x_i⁺ − x_i‖²`. Returns the block and the accepted step;
/// when no trial succeeds the block is left unchanged.
pub fn prox_linear_armijo<T: Scalar, P: CompositeProblem<T> + ?Sized>(
    problem: &mut P,
    i: usize,
    alpha0: T,
    sigma: T,
    backtrack: T,
    max_trials: usize,
) -> Result<(Vec<T>, T)> {
    check_block(problem, i)?;
    let g = problem.block_gradient(i)?;
    let xi = problem.block(i);
    let reg = problem.block_regularizer(i);
    let f0 = problem.objective();
    let mut alpha = alpha0;
    for _ in 0..max_trials {
        let cand = prox_linear_point(&reg, &xi, &g, alpha)?;
        let d2: T = cand.iter().zip(&xi).map(|(&a, &b)| (a - b) * (a - b)).sum();
        problem.set_block(i, &cand)?;
        if problem.objective() <= f0 - sigma / alpha * d2 {
            return Ok((cand, alpha));
        }
        alpha *= backtrack;
    }
    problem.set_block(i, &xi)?;
    Ok((xi, T::zero()))
}

/// `x_cur + ω (x_cur − x_prev)`.
pub fn extrapolate<T: Scalar>(x_cur: &[T], x_prev: &[T], omega: T) -> Result<Vec<T>> {
    if !(omega >= T::zero()) {
        return Err(Error::InvalidWeight(omega.to_f64_lossy()));
    }
    if x_cur.len() != x_prev.len() {
        return Err(shape_err(x_cur.len(), x_prev.len()));
    }
    Ok(x_cur
        .iter()
        .zip(x_prev)
        .map(|(&c, &p)| c + omega * (c - p))
        .collect())
}

/// Previous value of every block, for extrapolated prox-linear updates.
#[derive(Debug, Clone)]
pub struct ExtrapolationState<T> {
    prev: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> ExtrapolationState<T> {
    pub fn new(num_blocks: usize) -> Self {
        Self {
            prev: vec![None; num_blocks],
        }
    }
}

/// Prox-linear step taken from the extrapolated block `x̂_i = x_i + ω(x_i − x_i^{prev})`
/// with the gradient evaluated there.
pub fn prox_linear_extrapolated_step<T: Scalar, P: CompositeProblem<T> + ?Sized>(
    problem: &mut P,
    state: &mut ExtrapolationState<T>,
    i: usize,
    alpha: T,
    omega: T,
) -> Result<Vec<T>> {
    check_block(problem, i)?;
    let cur = problem.block(i);
    let hat = match &state.prev[i] {
        Some(p) => extrapolate(&cur, p, omega)?,
        None => cur.clone(),
    };
    problem.set_block(i, &hat)?;
    let g = problem.block_gradient(i)?;
    let new = prox_linear_point(&problem.block_regularizer(i), &hat, &g, alpha)?;
    problem.set_block(i, &new)?;
    state.prev[i] = Some(cur);
    Ok(new)
}

/// Resolves the step size of a deterministic prox-linear update.
pub fn block_step<T: Scalar, P: CompositeProblem<T> + ?Sized>(
    problem: &P,
    policy: &StepPolicy<T>,
    i: usize,
) -> Result<T> {
    match *policy {
        StepPolicy::Fixed(a) => Ok(a),
        StepPolicy::BlockLipschitzReciprocal | StepPolicy::Armijo { .. } => {
            let l = problem.block_lipschitz(i);
            if l > T::zero() && l.is_finite() {
                Ok(T::one() / l)
            } else {
                Err(Error::InvalidLipschitz {
                    index: i,
                    value: l.to_f64_lossy(),
                })
            }
        }
    }
}

/// One deterministic-scheme update of block `i`.
pub fn apply_scheme<T: Scalar, P: CompositeProblem<T> + ?Sized>(
    problem: &mut P,
    config: &SchemeConfig<T>,
    extrapolation: &mut ExtrapolationState<T>,
    i: usize,
) -> Result<Vec<T>> {
    match config.scheme {
        SchemeKind::ExactMin => coordinate_argmin_step(problem, i, T::zero()),
        SchemeKind::ProximalPoint => coordinate_argmin_step(problem, i, config.prox_weight),
        SchemeKind::ProxLinear => {
            let alpha = block_step(problem, &config.step_policy, i)?;
            match config.step_policy {
                StepPolicy::Armijo {
                    sigma,
                    backtrack,
                    max_trials,
                } => {
                    prox_linear_armijo(problem, i, alpha, sigma, backtrack, max_trials).map(|r| r.0)
                }
                _ => prox_linear_step(problem, i, alpha),
            }
        }
        SchemeKind::ProxLinearExtrapolated => {
            let alpha = block_step(problem, &config.step_policy, i)?;
            prox_linear_extrapolated_step(problem, extrapolation, i, alpha, config.omega)
        }
        SchemeKind::StochasticProxLinear => Err(Error::UnsupportedScheme(
            "stochastic updates run through run_stochastic".into(),
        )),
    }
}

/// `(1/|S|) Σ_{j∈S} ∇f_j(point)`.
pub fn minibatch_gradient<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    point: &[T],
    samples: &[usize],
) -> Result<Vec<T>> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let m = problem.num_samples();
    let mut acc = vec![T::zero(); point.len()];
    for &j in samples {
        if j >= m {
            return Err(Error::IndexOutOfRange { index: j, len: m });
        }
        let g = problem.sample_gradient(j, point)?;
        if g.len() != acc.len() {
            return Err(shape_err(acc.len(), g.len()));
        }
        for (a, v) in acc.iter_mut().zip(g) {
            *a += v;
        }
    }
    let k = T::of_usize(samples.len());
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(acc)
}

#[derive(Debug, Clone)]
struct Anchor<T> {
    point: Vec<T>,
    grads: Vec<Vec<T>>,
    average: Vec<T>,
}

/// Table of stored per-sample gradients with their running mean, plus the
/// SVRG anchor.
#[derive(Debug, Clone)]
pub struct GradientTable<T> {
    entries: Vec<Vec<T>>,
    average: Vec<T>,
    anchor: Option<Anchor<T>>,
}

fn mean_of<T: Scalar>(rows: &[Vec<T>], dim: usize) -> Vec<T> {
    let mut avg = vec![T::zero(); dim];
    for r in rows {
        for (a, &v) in avg.iter_mut().zip(r) {
            *a += v;
        }
    }
    let m = T::of_usize(rows.len().max(1));
    avg.iter_mut().for_each(|a| *a /= m);
    avg
}

impl<T: Scalar> GradientTable<T> {
    /// All entries zero.
    pub fn zeros(m: usize, dim: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyDomain);
        }
        Ok(Self {
            entries: vec![vec![T::zero(); dim]; m],
            average: vec![T::zero(); dim],
            anchor: None,
        })
    }

    pub fn from_gradients(entries: Vec<Vec<T>>) -> Result<Self> {
        let dim = entries.first().ok_or(Error::EmptyDomain)?.len();
        if let Some(bad) = entries.iter().find(|e| e.len() != dim) {
            return Err(shape_err(dim, bad.len()));
        }
        let average = mean_of(&entries, dim);
        Ok(Self {
            entries,
            average,
            anchor: None,
        })
    }

    /// Table filled with `∇f_j(point)` for every sample.
    pub fn at_point<P: FiniteSum<T> + ?Sized>(problem: &P, point: &[T]) -> Result<Self> {
        let grads = (0..problem.num_samples())
            .map(|j| problem.sample_gradient(j, point))
            .collect::<Result<Vec<_>>>()?;
        Self::from_gradients(grads)
    }

    pub fn sample_count(&self) -> usize {
        self.entries.len()
    }

    pub fn dim(&self) -> usize {
        self.average.len()
    }

    pub fn entry(&self, j: usize) -> &[T] {
        &self.entries[j]
    }

    pub fn average(&self) -> &[T] {
        &self.average
    }

    fn check(&self, j: usize, g: &[T]) -> Result<()> {
        if j >= self.entries.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.entries.len(),
            });
        }
        if g.len() != self.dim() {
            return Err(shape_err(self.dim(), g.len()));
        }
        Ok(())
    }

    /// Replaces entry `j` and updates the mean incrementally.
    pub fn replace(&mut self, j: usize, new_grad: &[T]) -> Result<()> {
        self.check(j, new_grad)?;
        let m = T::of_usize(self.entries.len());
        for ((a, old), &new) in self
            .average
            .iter_mut()
            .zip(&mut self.entries[j])
            .zip(new_grad)
        {
            *a += (new - *old) / m;
            *old = new;
        }
        Ok(())
    }

    /// `(∇f_j(x) − φ_j)/m + mean(φ)`, then stores `∇f_j(x)`.
    pub fn sag_estimate(&mut self, j: usize, new_grad: &[T]) -> Result<Vec<T>> {
        self.check(j, new_grad)?;
        let m = T::of_usize(self.entries.len());
        let est = new_grad
            .iter()
            .zip(&self.entries[j])
            .zip(&self.average)
            .map(|((&g, &old), &a)| (g - old) / m + a)
            .collect();
        self.replace(j, new_grad)?;
        Ok(est)
    }

    /// `∇f_j(x) − φ_j + mean(φ)`, then stores `∇f_j(x)`.
    pub fn saga_estimate(&mut self, j: usize, new_grad: &[T]) -> Result<Vec<T>> {
        let est = self.saga_peek(j, new_grad)?;
        self.replace(j, new_grad)?;
        Ok(est)
    }

    /// SAGA estimate without touching the table.
    pub fn saga_peek(&self, j: usize, new_grad: &[T]) -> Result<Vec<T>> {
        self.check(j, new_grad)?;
        Ok(new_grad
            .iter()
            .zip(&self.entries[j])
            .zip(&self.average)
            .map(|((&g, &old), &a)| g - old + a)
            .collect())
    }

    pub fn set_anchor(&mut self, point: Vec<T>, grads: Vec<Vec<T>>) -> Result<()> {
        if grads.len() != self.entries.len() {
            return Err(shape_err(self.entries.len(), grads.len()));
        }
        if let Some(bad) = grads.iter().find(|g| g.len() != self.dim()) {
            return Err(shape_err(self.dim(), bad.len()));
        }
        let average = mean_of(&grads, self.dim());
        self.anchor = Some(Anchor {
            point,
            grads,
            average,
        });
        Ok(())
    }

    /// Re-anchors at `point`, evaluating every sample gradient there.
    pub fn refresh_anchor<P: FiniteSum<T> + ?Sized>(
        &mut self,
        problem: &P,
        point: &[T],
    ) -> Result<()> {
        let grads = (0..problem.num_samples())
            .map(|j| problem.sample_gradient(j, point))
            .collect::<Result<Vec<_>>>()?;
        self.set_anchor(point.to_vec(), grads)
    }

    pub fn anchor_point(&self) -> Option<&[T]> {
        self.anchor.as_ref().map(|a| a.point.as_slice())
    }

    pub fn anchor_gradient(&self, j: usize) -> Result<&[T]> {
        let a = self.anchor.as_ref().ok_or(Error::NoAnchor)?;
        a.grads
            .get(j)
            .map(|g| g.as_slice())
            .ok_or(Error::IndexOutOfRange {
                index: j,
                len: a.grads.len(),
            })
    }

    pub fn anchor_average(&self) -> Result<&[T]> {
        self.anchor
            .as_ref()
            .map(|a| a.average.as_slice())
            .ok_or(Error::NoAnchor)
    }

    /// `∇f_j(x) − ∇f_j(x̃) + (1/m) Σ ∇f_l(x̃)`.
    pub fn svrg_estimate(&self, j: usize, grad_at_x: &[T], grad_at_anchor: &[T]) -> Result<Vec<T>> {
        let avg = self.anchor_average()?;
        self.check(j, grad_at_x)?;
        if grad_at_anchor.len() != avg.len() {
            return Err(shape_err(avg.len(), grad_at_anchor.len()));
        }
        Ok(grad_at_x
            .iter()
            .zip(grad_at_anchor)
            .zip(avg)
            .map(|((&g, &h), &a)| g - h + a)
            .collect())
    }

    /// Largest deviation of the maintained mean from a fresh recomputation.
    pub fn average_drift(&self) -> T {
        let fresh = mean_of(&self.entries, self.dim());
        fresh
            .iter()
            .zip(&self.average)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// Recomputes the mean from the stored entries.
    pub fn resync(&mut self) {
        self.average = mean_of(&self.entries, self.dim());
    }
}

pub fn sag_estimate<T: Scalar>(
    table: &mut GradientTable<T>,
    j: usize,
    new_grad: &[T],
) -> Result<Vec<T>> {
    table.sag_estimate(j, new_grad)
}

pub fn saga_estimate<T: Scalar>(
    table: &mut GradientTable<T>,
    j: usize,
    new_grad: &[T],
) -> Result<Vec<T>> {
    table.saga_estimate(j, new_grad)
}

pub fn svrg_estimate<T: Scalar>(
    table: &GradientTable<T>,
    j: usize,
    grad_at_x: &[T],
    grad_at_anchor: &[T],
) -> Result<Vec<T>> {
    table.svrg_estimate(j, grad_at_x, grad_at_anchor)
}

/// Mean of the per-sample Lipschitz constants.
pub fn mean_sample_lipschitz<T: Scalar, P: FiniteSum<T> + ?Sized>(problem: &P) -> T {
    let m = problem.num_samples();
    (0..m).map(|j| problem.sample_lipschitz(j)).sum::<T>() / T::of_usize(m)
}

/// Stochastic prox-linear driver. Each epoch performs `m` updates; every
/// update draws a block uniformly and a mini-batch of samples independently.
/// Without variance reduction a fixed step decays as `α₀/(1 + k/m)`.
/// Returns the objective after every epoch (epoch 0 included).
pub fn run_stochastic<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &mut P,
    config: &SchemeConfig<T>,
    epochs: usize,
    seed: u64,
) -> Result<Vec<T>> {
    config.validate()?;
    if config.scheme != SchemeKind::StochasticProxLinear {
        return Err(Error::UnsupportedScheme(format!(
            "{:?} is not stochastic",
            config.scheme
        )));
    }
    let m = problem.num_samples();
    let s = problem.num_blocks();
    if m == 0 || s == 0 {
        return Err(Error::EmptyDomain);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = problem.point();
    let mut table = match config.vr_mode {
        VrMode::Sag | VrMode::Saga => Some(GradientTable::at_point(problem, &x)?),
        VrMode::Svrg { .. } => Some(GradientTable::zeros(m, x.len())?),
        VrMode::None => None,
    };
    let base_step = |i: usize| -> Result<T> {
        match config.step_policy {
            StepPolicy::Fixed(a) => Ok(a),
            StepPolicy::BlockLipschitzReciprocal => {
                let l = problem.block_lipschitz(i);
                if l > T::zero() {
                    Ok(T::one() / l)
                } else {
                    Err(Error::InvalidLipschitz {
                        index: i,
                        value: l.to_f64_lossy(),
                    })
                }
            }
            StepPolicy::Armijo { .. } => Err(Error::UnsupportedScheme(
                "line search is not used with stochastic gradients".into(),
            )),
        }
    };
    let steps: Vec<T> = (0..s).map(base_step).collect::<Result<_>>()?;
    let mut history = vec![problem.objective()];
    let mut k = 0usize;
    let batch = config.batch_size;
    for epoch in 0..epochs {
        if let (VrMode::Svrg { update_period }, Some(t)) = (config.vr_mode, table.as_mut()) {
            if epoch % update_period == 0 {
                t.refresh_anchor(problem, &x)?;
            }
        }
        for _ in 0..m {
            let i = rng.random_range(0..s);
            let samples: Vec<usize> = (0..batch).map(|_| rng.random_range(0..m)).collect();
            let est = match (config.vr_mode, table.as_mut()) {
                (VrMode::None, _) => minibatch_gradient(problem, &x, &samples)?,
                (mode, Some(t)) => {
                    let mut acc = vec![T::zero(); x.len()];
                    for &j in &samples {
                        let g = problem.sample_gradient(j, &x)?;
                        let e = match mode {
                            VrMode::Sag => t.sag_estimate(j, &g)?,
                            VrMode::Saga => t.saga_estimate(j, &g)?,
                            VrMode::Svrg { .. } => {
                                let h = t.anchor_gradient(j)?.to_vec();
                                t.svrg_estimate(j, &g, &h)?
                            }
                            VrMode::None => unreachable!(),
                        };
                        acc.iter_mut().zip(e).for_each(|(a, v)| *a += v);
                    }
                    let b = T::of_usize(batch);
                    acc.iter_mut().for_each(|a| *a /= b);
                    acc
                }
                (_, None) => unreachable!("table exists for variance-reduced modes"),
            };
            let alpha = match config.vr_mode {
                VrMode::None => steps[i] / (T::one() + T::of_usize(k) / T::of_usize(m)),
                _ => steps[i],
            };
            let range = problem.block_range(i);
            let new = prox_linear_point(
                &problem.block_regularizer(i),
                &x[range.clone()],
                &est[range.clone()],
                alpha,
            )?;
            problem.set_block(i, &new)?;
            x[range].copy_from_slice(&new);
            k += 1;
        }
        history.push(problem.objective());
    }
    Ok(history)
}

/// `‖x − prox_{r/L}(x − ∇f(x)/L)‖` assembled block by block.
pub fn gradient_map_norm<T: Scalar, P: CompositeProblem<T> + ?Sized>(
    problem: &P,
    lipschitz: T,
) -> Result<T> {
    let alpha = T::one() / lipschitz;
    let mut acc = T::zero();
    for i in 0..problem.num_blocks() {
        let xi = problem.block(i);
        let g = problem.block_gradient(i)?;
        let p = prox_linear_point(&problem.block_regularizer(i), &xi, &g, alpha)?;
        let d: Vec<T> = xi.iter().zip(&p).map(|(&a, &b)| a - b).collect();
        acc += norm_sq(&d);
    }
    Ok(acc.sqrt())
}
