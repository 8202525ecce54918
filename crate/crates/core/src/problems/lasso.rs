//! LASSO `‖x‖₁ + (λ/2)‖Ax − b‖²` with coordinates as blocks.
//!
//! The cache is `Ax`; `Aᵀb` and the column norms are precomputed. Greedy
//! rules additionally maintain the full gradient `Aᵀ(Ax − b)` through the
//! columns of `AᵀA`.

use crate::error::{shape_err, Error, Result};
use crate::numeric::{
    dot, norm, norm_sq, spectral_norm_sq, DenseMatrix, FlopCounter, DEFAULT_POWER_ITERS,
    DEFAULT_POWER_TOL,
};
use crate::prox::{shrink, Regularizer};
use crate::scalar::Scalar;
use crate::schemes::CompositeProblem;
use crate::selection::GreedyRule;

use super::{gradient_map, l1_scores, CoordinateProblem};

#[derive(Debug, Clone)]
struct GradCache<T> {
    gram: DenseMatrix<T>,
    /// `Aᵀ(Ax − b)`
    g: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct LassoProblem<T> {
    /// `Aᵀ`, so that columns of `A` are contiguous rows.
    at: DenseMatrix<T>,
    b: Vec<T>,
    lambda: T,
    x: Vec<T>,
    col_norms_sq: Vec<T>,
    atb: Vec<T>,
    ax: Vec<T>,
    spec_sq: T,
    grad_cache: Option<GradCache<T>>,
    flops: FlopCounter,
}

impl<T: Scalar> LassoProblem<T> {
    /// Starts at `x = 0`.
    pub fn new(a: &DenseMatrix<T>, b: Vec<T>, lambda: T) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(shape_err(a.rows(), b.len()));
        }
        if !(lambda > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let at = a.transpose();
        let col_norms_sq: Vec<T> = (0..at.rows()).map(|j| norm_sq(at.row(j))).collect();
        if let Some(j) = col_norms_sq.iter().position(|&v| !(v > T::zero())) {
            return Err(Error::DegenerateColumn(j));
        }
        let atb = a.matvec_t(&b);
        let spec_sq = spectral_norm_sq(a, DEFAULT_POWER_ITERS, T::of(DEFAULT_POWER_TOL));
        Ok(Self {
            x: vec![T::zero(); a.cols()],
            ax: vec![T::zero(); a.rows()],
            at,
            b,
            lambda,
            col_norms_sq,
            atb,
            spec_sq,
            grad_cache: None,
            flops: FlopCounter::new(),
        })
    }

    /// Maintains `Aᵀ(Ax − b)` as well, making greedy scores O(n).
    pub fn with_gradient_cache(mut self) -> Self {
        let gram = self.at.matmul(&self.at.transpose());
        let g = self.fresh_gradient_raw();
        self.grad_cache = Some(GradCache { gram, g });
        self
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Changes `λ`, keeping `x` and the caches (used by continuation).
    pub fn set_lambda(&mut self, lambda: T) -> Result<()> {
        if !(lambda > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        self.lambda = lambda;
        Ok(())
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn rows(&self) -> usize {
        self.ax.len()
    }

    pub fn cols(&self) -> usize {
        self.x.len()
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn col_norms_sq(&self) -> &[T] {
        &self.col_norms_sq
    }

    /// `A` reconstructed from the stored transpose.
    pub fn a(&self) -> DenseMatrix<T> {
        self.at.transpose()
    }

    pub fn set_x(&mut self, x: Vec<T>) -> Result<()> {
        if x.len() != self.x.len() {
            return Err(shape_err(self.x.len(), x.len()));
        }
        self.x = x;
        self.ax = self.at.matvec_t(&self.x);
        if self.grad_cache.is_some() {
            let g = self.fresh_gradient_raw();
            if let Some(c) = self.grad_cache.as_mut() {
                c.g = g;
            }
        }
        Ok(())
    }

    /// Global Lipschitz constant `λ‖A‖₂²` of the smooth part.
    pub fn global_lipschitz(&self) -> T {
        self.lambda * self.spec_sq
    }

    /// `L_i = λ‖A_{:,i}‖²`.
    pub fn coordinate_lipschitz(&self, i: usize) -> T {
        self.lambda * self.col_norms_sq[i]
    }

    pub fn objective_at(&self, x: &[T]) -> Result<T> {
        if x.len() != self.x.len() {
            return Err(shape_err(self.x.len(), x.len()));
        }
        let ax = self.at.matvec_t(x);
        let r: Vec<T> = ax.iter().zip(&self.b).map(|(&p, &q)| p - q).collect();
        Ok(x.iter().map(|v| v.abs()).sum::<T>() + T::half() * self.lambda * norm_sq(&r))
    }

    fn objective_cached(&self) -> T {
        let r2: T = self
            .ax
            .iter()
            .zip(&self.b)
            .map(|(&p, &q)| (p - q) * (p - q))
            .sum();
        self.x.iter().map(|v| v.abs()).sum::<T>() + T::half() * self.lambda * r2
    }

    /// `Aᵀ(Ax − b)` from the cached `Ax`, O(mn).
    fn fresh_gradient_raw(&self) -> Vec<T> {
        let r: Vec<T> = self.ax.iter().zip(&self.b).map(|(&p, &q)| p - q).collect();
        self.at.matvec(&r)
    }

    /// `A_{:,j}ᵀ(Ax − b)`.
    fn raw_partial(&self, j: usize) -> T {
        match &self.grad_cache {
            Some(c) => c.g[j],
            None => dot(self.at.row(j), &self.ax) - self.atb[j],
        }
    }

    /// `∇f(x) = λAᵀ(Ax − b)`.
    pub fn gradient(&self) -> Vec<T> {
        let raw = match &self.grad_cache {
            Some(c) => c.g.clone(),
            None => self.fresh_gradient_raw(),
        };
        raw.into_iter().map(|v| self.lambda * v).collect()
    }

    fn apply_delta(&mut self, i: usize, delta: T) {
        if delta == T::zero() {
            return;
        }
        self.x[i] += delta;
        let m = self.ax.len();
        for (a, &c) in self.ax.iter_mut().zip(self.at.row(i)) {
            *a += delta * c;
        }
        self.flops.axpy(m);
        if let Some(c) = self.grad_cache.as_mut() {
            let n = c.g.len();
            for (g, &q) in c.g.iter_mut().zip(c.gram.row(i)) {
                *g += delta * q;
            }
            self.flops.axpy(n);
        }
    }

    /// `x_i ← shrink(x_i − A_iᵀ(Ax − b)/‖A_i‖², 1/(λ‖A_i‖²))`, then
    /// `Ax ← Ax + Δ A_i`. Returns the new coordinate.
    pub fn lasso_coordinate_step(&mut self, i: usize) -> Result<T> {
        let n = self.x.len();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        let c = self.col_norms_sq[i];
        if !(c > T::zero()) {
            return Err(Error::DegenerateColumn(i));
        }
        let g = self.raw_partial(i);
        if self.grad_cache.is_none() {
            self.flops.dot(self.ax.len());
            self.flops.scalar(1);
        }
        let xi = self.x[i];
        let new = shrink(xi - g / c, T::one() / (self.lambda * c));
        self.flops.scalar(5);
        self.flops.prox(1);
        self.apply_delta(i, new - xi);
        Ok(new)
    }

    /// Exact minimizer over coordinate `i` of `F + (ρ/2)(x_i − x_i^{old})²`.
    fn coordinate_argmin(&self, i: usize, rho: T) -> T {
        let xi = self.x[i];
        let li = self.coordinate_lipschitz(i);
        let g = self.lambda * self.raw_partial(i);
        let q = li + rho;
        shrink(xi - g / q, T::one() / q)
    }

    /// Greedy scores. GS-s, GS-r and GS-q follow the `ℓ1` formulas with the
    /// global constant `λ‖A‖₂²`; MBI scores are objective values after exact
    /// minimization of each coordinate.
    pub fn lasso_gs_scores(&self, rule: GreedyRule) -> Result<Vec<T>> {
        let grad = self.gradient();
        match rule {
            GreedyRule::GsS | GreedyRule::GsR | GreedyRule::GsQ | GreedyRule::Gs => {
                Ok(l1_scores(&self.x, &grad, self.global_lipschitz(), rule))
            }
            GreedyRule::Gsl => {
                let abs: Vec<T> = grad.iter().map(|g| g.abs()).collect();
                let l: Vec<T> = (0..self.x.len())
                    .map(|i| self.coordinate_lipschitz(i))
                    .collect();
                crate::selection::gsl_scores(&abs, &l)
            }
            GreedyRule::Mbi => {
                let f = self.objective_cached();
                Ok((0..self.x.len())
                    .map(|j| {
                        let xj = self.x[j];
                        let new = self.coordinate_argmin(j, T::zero());
                        let d = new - xj;
                        f + new.abs() - xj.abs()
                            + d * grad[j]
                            + T::half() * self.coordinate_lipschitz(j) * d * d
                    })
                    .collect())
            }
        }
    }

    /// `x − shrink(x − ∇f(x)/L, 1/L)`.
    pub fn lasso_gradient_map(&self, l: T) -> Vec<T> {
        gradient_map(&self.x, &self.gradient(), l, T::one())
    }

    /// Relative deviation of the maintained caches from recomputation.
    pub fn cache_drift(&self) -> T {
        let fresh = self.at.matvec_t(&self.x);
        let scale = T::one() + crate::numeric::norm_inf(&fresh);
        let mut d = fresh
            .iter()
            .zip(&self.ax)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
            / scale;
        if let Some(c) = &self.grad_cache {
            let g = self.fresh_gradient_raw();
            let s = T::one() + crate::numeric::norm_inf(&g);
            let e = g
                .iter()
                .zip(&c.g)
                .map(|(&a, &b)| (a - b).abs())
                .fold(T::zero(), T::max)
                / s;
            d = d.max(e);
        }
        d
    }
}

/// `λ₀, ηλ₀, η²λ₀, …` capped at `λ_target`, which is always the last entry.
pub fn continuation_schedule<T: Scalar>(lambda0: T, eta: T, lambda_target: T) -> Result<Vec<T>> {
    if !(eta > T::one()) {
        return Err(Error::InvalidContinuation(format!(
            "growth factor must exceed 1, got {eta}"
        )));
    }
    if !(lambda0 > T::zero()) || !(lambda0 <= lambda_target) || !lambda_target.is_finite() {
        return Err(Error::InvalidContinuation(format!(
            "need 0 < lambda0 <= target, got {lambda0} and {lambda_target}"
        )));
    }
    let mut out = vec![lambda0];
    let mut v = lambda0;
    let slack = T::one() - T::of(1e-12);
    while v < lambda_target {
        v *= eta;
        if v >= lambda_target * slack {
            out.push(lambda_target);
            break;
        }
        out.push(v);
    }
    Ok(out)
}

impl<T: Scalar> CompositeProblem<T> for LassoProblem<T> {
    fn num_blocks(&self) -> usize {
        self.x.len()
    }

    fn block(&self, i: usize) -> Vec<T> {
        vec![self.x[i]]
    }

    fn set_block(&mut self, i: usize, value: &[T]) -> Result<()> {
        if value.len() != 1 {
            return Err(shape_err(1, value.len()));
        }
        let d = value[0] - self.x[i];
        self.apply_delta(i, d);
        Ok(())
    }

    fn block_gradient(&self, i: usize) -> Result<Vec<T>> {
        Ok(vec![self.lambda * self.raw_partial(i)])
    }

    fn block_lipschitz(&self, i: usize) -> T {
        self.coordinate_lipschitz(i)
    }

    fn block_regularizer(&self, _: usize) -> Regularizer<T> {
        Regularizer::L1 { weight: T::one() }
    }

    fn objective(&self) -> T {
        self.objective_cached()
    }

    fn block_argmin(&self, i: usize, prox_weight: T) -> Result<Vec<T>> {
        Ok(vec![self.coordinate_argmin(i, prox_weight)])
    }
}

impl<T: Scalar> CoordinateProblem<T> for LassoProblem<T> {
    fn num_blocks(&self) -> usize {
        self.x.len()
    }

    fn objective(&self) -> T {
        self.objective_cached()
    }

    fn update(&mut self, i: usize) -> Result<()> {
        self.lasso_coordinate_step(i).map(|_| ())
    }

    fn scores(&self, rule: GreedyRule) -> Result<Vec<T>> {
        self.lasso_gs_scores(rule)
    }

    fn stationarity(&self) -> T {
        norm(&self.lasso_gradient_map(self.global_lipschitz()))
    }

    fn variables(&self) -> Vec<T> {
        self.x.clone()
    }

    fn flops(&self) -> FlopCounter {
        self.flops
    }

    fn block_lipschitz_all(&self) -> Vec<T> {
        (0..self.x.len())
            .map(|i| self.coordinate_lipschitz(i))
            .collect()
    }

    /// Proximal gradient step `x ← shrink(x − ∇f(x)/L, 1/L)` with `Ax` refreshed.
    fn full_update(&mut self) -> Result<()> {
        let (m, n) = (self.ax.len(), self.x.len());
        let l = self.global_lipschitz();
        let r: Vec<T> = self.ax.iter().zip(&self.b).map(|(&p, &q)| p - q).collect();
        let g = self.at.matvec(&r);
        for (x, &gv) in self.x.iter_mut().zip(&g) {
            *x = shrink(*x - self.lambda * gv / l, T::one() / l);
        }
        self.ax = self.at.matvec_t(&self.x);
        if self.grad_cache.is_some() {
            let g = self.fresh_gradient_raw();
            if let Some(c) = self.grad_cache.as_mut() {
                c.g = g;
            }
        }
        self.flops.elementwise(m);
        self.flops.mat_vec(n, m);
        self.flops.scalar(3 * n);
        self.flops.prox(n);
        self.flops.mat_vec(m, n);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{greedy_argmax, Sense};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_case() -> LassoProblem<f64> {
        LassoProblem::new(&DenseMatrix::identity(2), vec![2.0, 0.1], 1.0).unwrap()
    }

    fn random_case(seed: u64, m: usize, n: usize, lambda: f64) -> LassoProblem<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let b = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        LassoProblem::new(&a, b, lambda).unwrap()
    }

    #[test]
    fn objective_at_zero() {
        let p = identity_case();
        assert!((CoordinateProblem::objective(&p) - 0.5 * (4.0 + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn identity_sweep_reaches_optimum() {
        let mut p = identity_case();
        assert_eq!(p.lasso_coordinate_step(0).unwrap(), 1.0);
        assert_eq!(p.lasso_coordinate_step(1).unwrap(), 0.0);
        assert_eq!(p.x(), &[1.0, 0.0]);
        // Fixed point afterwards.
        p.lasso_coordinate_step(0).unwrap();
        assert_eq!(p.x(), &[1.0, 0.0]);
    }

    #[test]
    fn gs_s_examples() {
        let p = identity_case();
        let s = p.lasso_gs_scores(GreedyRule::GsS).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-15 && s[1] == 0.0);
    }

    #[test]
    fn gradient_map_example() {
        let p = identity_case();
        let g = p.lasso_gradient_map(1.0);
        assert!((g[0] + 1.0).abs() < 1e-15 && g[1] == 0.0);
    }

    #[test]
    fn continuation_examples() {
        assert_eq!(
            continuation_schedule(1.0, 10.0, 1000.0).unwrap(),
            vec![1.0, 10.0, 100.0, 1000.0]
        );
        assert_eq!(
            continuation_schedule(1000.0, 10.0, 1000.0).unwrap(),
            vec![1000.0]
        );
        assert!(matches!(
            continuation_schedule(1.0, 1.0, 1000.0),
            Err(Error::InvalidContinuation(_))
        ));
        let s = continuation_schedule(1.0, 3.0, 100.0).unwrap();
        assert_eq!(*s.last().unwrap(), 100.0);
        assert_eq!(s, vec![1.0, 3.0, 9.0, 27.0, 81.0, 100.0]);
    }

    #[test]
    fn caches_survive_random_updates() {
        let mut p = random_case(1, 20, 40, 5.0).with_gradient_cache();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let i = rng.random_range(0..40);
            if rng.random_bool(0.5) {
                p.lasso_coordinate_step(i).unwrap();
            } else {
                p.set_block(i, &[rng.random_range(-1.0..1.0)]).unwrap();
            }
        }
        assert!(p.cache_drift() <= 1e-9, "{}", p.cache_drift());
    }

    #[test]
    fn cyclic_sweeps_descend_and_converge() {
        let mut p = random_case(2, 15, 30, 10.0);
        let mut prev = CoordinateProblem::objective(&p);
        for k in 0..30 * 3000 {
            p.update(k % 30).unwrap();
            let f = CoordinateProblem::objective(&p);
            assert!(f <= prev + 1e-12 * (1.0 + prev.abs()));
            prev = f;
        }
        assert!(p.stationarity() < 1e-8, "{}", p.stationarity());
        // Fixed point: another step changes nothing measurable.
        let before = p.x().to_vec();
        p.lasso_coordinate_step(3).unwrap();
        assert!((p.x()[3] - before[3]).abs() < 1e-9);
        let r = p.lasso_gs_scores(GreedyRule::GsR).unwrap();
        assert!(r.iter().all(|&v| v < 1e-9));
    }

    #[test]
    fn gs_q_selection_minimizes_model() {
        let mut p = random_case(4, 10, 25, 3.0).with_gradient_cache();
        for k in 0..60 {
            let q = p.lasso_gs_scores(GreedyRule::GsQ).unwrap();
            let j = greedy_argmax(&q, Sense::Min).unwrap();
            assert!(q.iter().all(|&v| q[j] <= v));
            p.update(j).unwrap();
            if k % 7 == 0 {
                p.update(k % 25).unwrap();
            }
        }
    }

    #[test]
    fn mbi_scores_match_trial_updates() {
        let p = random_case(5, 8, 12, 2.0);
        let scores = p.lasso_gs_scores(GreedyRule::Mbi).unwrap();
        for j in 0..12 {
            let mut q = p.clone();
            q.lasso_coordinate_step(j).unwrap();
            let f = q.objective_at(q.x()).unwrap();
            assert!((scores[j] - f).abs() <= 1e-9 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn argmin_with_prox_weight_moves_less() {
        let mut p = random_case(6, 8, 12, 2.0);
        let before = p.x()[4];
        let exact = p.block_argmin(4, 0.0).unwrap()[0];
        let damped = p.block_argmin(4, 1e3).unwrap()[0];
        assert!((damped - before).abs() <= (exact - before).abs());
        crate::schemes::coordinate_argmin_step(&mut p, 4, 0.0).unwrap();
        assert_eq!(p.x()[4], exact);
    }
}
