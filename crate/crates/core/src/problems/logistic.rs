//! Sparse logistic regression `‖w‖₁ + C Σ_i log(1 + exp(−y_i wᵀx_i))`
//! solved by coordinate Newton steps with an Armijo search.
//!
//! The cache holds `e_i = exp(−y_i wᵀx_i)` and `log(1 + e_i)`.

use crate::error::{shape_err, Error, Result};
use crate::numeric::{
    norm, spectral_norm_sq, DenseMatrix, FlopCounter, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL,
};
use crate::prox::Regularizer;
use crate::scalar::Scalar;
use crate::schemes::CompositeProblem;
use crate::selection::GreedyRule;

use super::{gradient_map, l1_scores, CoordinateProblem};

/// Smallest curvature used in a Newton direction.
pub const CURVATURE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams<T> {
    pub sigma: T,
    pub backtrack: T,
    pub max_trials: usize,
}

impl<T: Scalar> Default for ArmijoParams<T> {
    fn default() -> Self {
        Self {
            sigma: T::of(0.01),
            backtrack: T::half(),
            max_trials: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticProblem<T> {
    /// Feature-major `z_{ji} = y_i x_{ij}` (row `j` holds feature `j`).
    z: DenseMatrix<T>,
    /// Feature-major `x_{ij}²`.
    xsq: DenseMatrix<T>,
    labels: Vec<T>,
    c: T,
    w: Vec<T>,
    e: Vec<T>,
    log1pe: Vec<T>,
    l_global: T,
    l_coord: Vec<T>,
    armijo: ArmijoParams<T>,
    failed_searches: usize,
    flops: FlopCounter,
}

/// Three-case minimizer of `f′d + ½f″d² + |w + d|`.
pub fn newton_direction<T: Scalar>(fp: T, fpp: T, w: T) -> T {
    let h = fpp.max(T::of(CURVATURE_FLOOR));
    if fp + T::one() <= h * w {
        -(fp + T::one()) / h
    } else if fp - T::one() >= h * w {
        -(fp - T::one()) / h
    } else {
        -w
    }
}

impl<T: Scalar> LogisticProblem<T> {
    /// `samples` is `m × n` (one sample per row); labels must be ±1. Starts at `w = 0`.
    pub fn new(samples: &DenseMatrix<T>, labels: Vec<T>, c: T) -> Result<Self> {
        let (m, n) = samples.shape();
        if labels.len() != m {
            return Err(shape_err(m, labels.len()));
        }
        if let Some(i) = labels.iter().position(|&y| y != T::one() && y != -T::one()) {
            return Err(Error::InvalidParameter(format!(
                "label {i} is {}, expected ±1",
                labels[i]
            )));
        }
        if !(c > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {c}"
            )));
        }
        let z = DenseMatrix::from_fn(n, m, |j, i| labels[i] * samples[(i, j)]);
        let xsq = DenseMatrix::from_fn(n, m, |j, i| samples[(i, j)] * samples[(i, j)]);
        let quarter = T::of(0.25);
        let l_global =
            quarter * c * spectral_norm_sq(samples, DEFAULT_POWER_ITERS, T::of(DEFAULT_POWER_TOL));
        let l_coord = (0..n)
            .map(|j| quarter * c * xsq.row(j).iter().copied().sum::<T>())
            .collect();
        let e = vec![T::one(); m];
        let log1pe = vec![T::two().ln(); m];
        Ok(Self {
            z,
            xsq,
            labels,
            c,
            w: vec![T::zero(); n],
            e,
            log1pe,
            l_global,
            l_coord,
            armijo: ArmijoParams::default(),
            failed_searches: 0,
            flops: FlopCounter::new(),
        })
    }

    pub fn with_armijo(mut self, params: ArmijoParams<T>) -> Self {
        self.armijo = params;
        self
    }

    pub fn w(&self) -> &[T] {
        &self.w
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn samples(&self) -> usize {
        self.e.len()
    }

    pub fn features(&self) -> usize {
        self.w.len()
    }

    pub fn c(&self) -> T {
        self.c
    }

    /// Coordinate steps whose line search found no acceptable step.
    pub fn failed_searches(&self) -> usize {
        self.failed_searches
    }

    /// `(C/4)‖X‖₂²`.
    pub fn global_lipschitz(&self) -> T {
        self.l_global
    }

    pub fn set_w(&mut self, w: Vec<T>) -> Result<()> {
        if w.len() != self.w.len() {
            return Err(shape_err(self.w.len(), w.len()));
        }
        self.w = w;
        self.refresh_cache();
        Ok(())
    }

    fn margins(&self, w: &[T]) -> Vec<T> {
        let m = self.e.len();
        let mut t = vec![T::zero(); m];
        for (j, &wj) in w.iter().enumerate() {
            if wj != T::zero() {
                for (ti, &zij) in t.iter_mut().zip(self.z.row(j)) {
                    *ti += wj * zij;
                }
            }
        }
        t
    }

    fn refresh_cache(&mut self) {
        let t = self.margins(&self.w);
        self.e = t.iter().map(|&v| (-v).exp()).collect();
        self.log1pe = t.iter().map(|&v| softplus(-v)).collect();
    }

    pub fn objective_at(&self, w: &[T]) -> Result<T> {
        if w.len() != self.w.len() {
            return Err(shape_err(self.w.len(), w.len()));
        }
        let loss: T = self.margins(w).iter().map(|&v| softplus(-v)).sum();
        Ok(w.iter().map(|v| v.abs()).sum::<T>() + self.c * loss)
    }

    fn objective_cached(&self) -> T {
        self.w.iter().map(|v| v.abs()).sum::<T>() + self.c * self.log1pe.iter().copied().sum::<T>()
    }

    /// `(f′_j, f″_j)` from the cache.
    pub fn partials(&self, j: usize) -> (T, T) {
        let mut fp = T::zero();
        let mut fpp = T::zero();
        for ((&ei, &zij), &xx) in self.e.iter().zip(self.z.row(j)).zip(self.xsq.row(j)) {
            let s = T::one() / (T::one() + ei);
            fp += zij * (s - T::one());
            fpp += xx * s * (T::one() - s);
        }
        (self.c * fp, self.c * fpp)
    }

    /// Gradient of the smooth part, O(mn).
    pub fn gradient(&self) -> Vec<T> {
        let sig: Vec<T> = self
            .e
            .iter()
            .map(|&ei| T::one() / (T::one() + ei) - T::one())
            .collect();
        (0..self.w.len())
            .map(|j| {
                self.c
                    * self
                        .z
                        .row(j)
                        .iter()
                        .zip(&sig)
                        .map(|(&a, &b)| a * b)
                        .sum::<T>()
            })
            .collect()
    }

    /// Coordinate Newton step on `w_j` with Armijo backtracking:
    /// accept `λ` once `g(λd) ≤ σλ(f′d + |w_j + d| − |w_j|)`.
    pub fn logistic_newton_step(&mut self, j: usize) -> Result<T> {
        let n = self.w.len();
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, len: n });
        }
        let m = self.e.len();
        let (fp, fpp) = self.partials(j);
        self.flops.scalar(9 * m + 2);
        let wj = self.w[j];
        let d = newton_direction(fp, fpp, wj);
        self.flops.scalar(4);
        if d == T::zero() {
            return Ok(wj);
        }
        let delta = fp * d + (wj + d).abs() - wj.abs();
        let mut step = T::one();
        let mut new_e = vec![T::zero(); m];
        let mut new_l = vec![T::zero(); m];
        for _ in 0..self.armijo.max_trials {
            let sd = step * d;
            let mut loss_change = T::zero();
            for i in 0..m {
                let zi = self.z[(j, i)];
                let ei = self.e[i] * (-sd * zi).exp();
                let li = ei.ln_1p();
                new_e[i] = ei;
                new_l[i] = li;
                loss_change += li - self.log1pe[i];
            }
            self.flops.scalar(6 * m + 6);
            self.flops.transcendental(2 * m);
            let change = (wj + sd).abs() - wj.abs() + self.c * loss_change;
            if change <= self.armijo.sigma * step * delta {
                self.w[j] = wj + sd;
                std::mem::swap(&mut self.e, &mut new_e);
                std::mem::swap(&mut self.log1pe, &mut new_l);
                return Ok(self.w[j]);
            }
            step *= self.armijo.backtrack;
        }
        self.failed_searches += 1;
        Ok(wj)
    }

    /// Relative deviation of the cached `e_i` from recomputation.
    pub fn cache_drift(&self) -> T {
        let t = self.margins(&self.w);
        t.iter()
            .zip(&self.e)
            .map(|(&v, &ei)| {
                let fresh = (-v).exp();
                (fresh - ei).abs() / fresh.abs().max(T::min_positive_value())
            })
            .fold(T::zero(), T::max)
    }

    pub fn logistic_gs_scores(&self, rule: GreedyRule) -> Result<Vec<T>> {
        let g = self.gradient();
        match rule {
            GreedyRule::Gs | GreedyRule::GsS | GreedyRule::GsR | GreedyRule::GsQ => {
                Ok(l1_scores(&self.w, &g, self.l_global, rule))
            }
            GreedyRule::Gsl => {
                let abs: Vec<T> = g.iter().map(|v| v.abs()).collect();
                crate::selection::gsl_scores(&abs, &self.l_coord)
            }
            GreedyRule::Mbi => Err(Error::UnsupportedScheme(
                "MBI needs an exact coordinate minimizer".into(),
            )),
        }
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus<T: Scalar>(t: T) -> T {
    if t > T::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl<T: Scalar> CompositeProblem<T> for LogisticProblem<T> {
    fn num_blocks(&self) -> usize {
        self.w.len()
    }

    fn block(&self, i: usize) -> Vec<T> {
        vec![self.w[i]]
    }

    fn set_block(&mut self, i: usize, value: &[T]) -> Result<()> {
        if value.len() != 1 {
            return Err(shape_err(1, value.len()));
        }
        let d = value[0] - self.w[i];
        if d != T::zero() {
            self.w[i] = value[0];
            for k in 0..self.e.len() {
                self.e[k] = self.e[k] * (-d * self.z[(i, k)]).exp();
                self.log1pe[k] = self.e[k].ln_1p();
            }
        }
        Ok(())
    }

    fn block_gradient(&self, i: usize) -> Result<Vec<T>> {
        Ok(vec![self.partials(i).0])
    }

    fn block_lipschitz(&self, i: usize) -> T {
        self.l_coord[i]
    }

    fn block_regularizer(&self, _: usize) -> Regularizer<T> {
        Regularizer::L1 { weight: T::one() }
    }

    fn objective(&self) -> T {
        self.objective_cached()
    }
}

impl<T: Scalar> CoordinateProblem<T> for LogisticProblem<T> {
    fn num_blocks(&self) -> usize {
        self.w.len()
    }

    fn objective(&self) -> T {
        self.objective_cached()
    }

    fn update(&mut self, i: usize) -> Result<()> {
        self.logistic_newton_step(i).map(|_| ())
    }

    fn scores(&self, rule: GreedyRule) -> Result<Vec<T>> {
        self.logistic_gs_scores(rule)
    }

    fn stationarity(&self) -> T {
        norm(&gradient_map(
            &self.w,
            &self.gradient(),
            self.l_global,
            T::one(),
        ))
    }

    fn variables(&self) -> Vec<T> {
        self.w.clone()
    }

    fn flops(&self) -> FlopCounter {
        self.flops
    }

    fn block_lipschitz_all(&self) -> Vec<T> {
        self.l_coord.clone()
    }

    /// Simultaneous coordinate Newton step on every coordinate, with one
    /// Armijo search along the combined direction.
    fn full_update(&mut self) -> Result<()> {
        let (m, n) = (self.e.len(), self.w.len());
        let sig: Vec<T> = self
            .e
            .iter()
            .map(|&ei| T::one() / (T::one() + ei))
            .collect();
        self.flops.scalar(2 * m);
        let mut dir = vec![T::zero(); n];
        let mut delta = T::zero();
        for j in 0..n {
            let mut fp = T::zero();
            let mut fpp = T::zero();
            for ((&s, &zij), &xx) in sig.iter().zip(self.z.row(j)).zip(self.xsq.row(j)) {
                fp += zij * (s - T::one());
                fpp += xx * s * (T::one() - s);
            }
            let (fp, fpp) = (self.c * fp, self.c * fpp);
            dir[j] = newton_direction(fp, fpp, self.w[j]);
            delta += fp * dir[j] + (self.w[j] + dir[j]).abs() - self.w[j].abs();
        }
        self.flops.scalar(7 * m * n + 12 * n);
        // Margin change of the direction: (Zd)_i.
        let zd = self.margins(&dir);
        self.flops.mat_vec(m, n);
        let f0 = self.objective_cached();
        let mut step = T::one();
        for _ in 0..self.armijo.max_trials {
            let mut new_e = Vec::with_capacity(m);
            let mut loss = T::zero();
            for i in 0..m {
                let ei = self.e[i] * (-step * zd[i]).exp();
                loss += ei.ln_1p();
                new_e.push(ei);
            }
            let reg: T = self
                .w
                .iter()
                .zip(&dir)
                .map(|(&a, &b)| (a + step * b).abs())
                .sum();
            self.flops.scalar(4 * m + 3 * n);
            self.flops.transcendental(2 * m);
            if reg + self.c * loss - f0 <= self.armijo.sigma * step * delta {
                for (wj, &dj) in self.w.iter_mut().zip(&dir) {
                    *wj += step * dj;
                }
                self.e = new_e;
                self.log1pe = self.e.iter().map(|&v| v.ln_1p()).collect();
                self.flops.scalar(2 * n);
                return Ok(());
            }
            step *= self.armijo.backtrack;
        }
        self.failed_searches += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, m: usize, n: usize) -> LogisticProblem<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let y = (0..m)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        LogisticProblem::new(&x, y, 1.0).unwrap()
    }

    #[test]
    fn direction_cases() {
        assert_eq!(newton_direction(0.5, 1.0, 0.0), 0.0);
        assert_eq!(newton_direction(2.0, 1.0, 0.0), -1.0);
        assert_eq!(newton_direction(-2.0, 1.0, 0.0), 1.0);
        // Curvature floor keeps the direction finite.
        assert!(newton_direction(2.0_f64, 0.0, 0.0).is_finite());
    }

    #[test]
    fn rejects_bad_labels() {
        let x = DenseMatrix::from_fn(2, 1, |i, _| i as f64);
        assert!(LogisticProblem::new(&x, vec![1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn newton_steps_descend_and_keep_cache() {
        let mut p = random_problem(1, 60, 8);
        let mut prev = CoordinateProblem::objective(&p);
        for k in 0..8 * 200 {
            p.update(k % 8).unwrap();
            let f = CoordinateProblem::objective(&p);
            assert!(f <= prev + 1e-12 * (1.0 + prev.abs()));
            prev = f;
        }
        assert!(p.cache_drift() <= 1e-8);
        let direct = p.objective_at(p.w()).unwrap();
        assert!((direct - prev).abs() <= 1e-9 * direct.abs());
        assert!(p.stationarity() <= 1e-8, "{}", p.stationarity());
    }

    #[test]
    fn symmetric_data_gives_equal_gs_s_scores() {
        // Points ±(1, 1) with labels ±1: both features play the same role.
        let x = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let p = LogisticProblem::new(&x, vec![1.0, -1.0], 3.0).unwrap();
        let s = p.logistic_gs_scores(GreedyRule::GsS).unwrap();
        assert_eq!(s[0], s[1]);
        assert!(s[0] > 0.0);
    }

    #[test]
    fn small_gradient_at_zero_scores_zero() {
        let p = random_problem(2, 10, 3);
        let g = p.gradient();
        let s = p.logistic_gs_scores(GreedyRule::GsS).unwrap();
        for (gj, sj) in g.iter().zip(&s) {
            if gj.abs() <= 1.0 {
                assert_eq!(*sj, 0.0);
            }
        }
    }

    #[test]
    fn full_update_descends() {
        let mut p = random_problem(3, 50, 5);
        let f0 = CoordinateProblem::objective(&p);
        p.full_update().unwrap();
        assert!(CoordinateProblem::objective(&p) < f0);
        assert!(p.cache_drift() <= 1e-10);
    }
}
