//! Linear SVM dual `½αᵀQα − 1ᵀα` over the box `[0, C]^m` with the cache `Qα`.

use crate::error::{shape_err, Error, Result};
use crate::numeric::{
    dot, spectral_norm_sq, DenseMatrix, FlopCounter, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL,
};
use crate::prox::{clip, Regularizer};
use crate::scalar::Scalar;
use crate::schemes::CompositeProblem;
use crate::selection::GreedyRule;

use super::CoordinateProblem;

/// Diagonal entries at or below this are rejected.
pub const DIAGONAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SvmDualProblem<T> {
    q: DenseMatrix<T>,
    c: T,
    alpha: Vec<T>,
    q_alpha: Vec<T>,
    flops: FlopCounter,
}

impl<T: Scalar> SvmDualProblem<T> {
    /// Builds `Q_{ij} = y_i y_j x_iᵀx_j` from `m × n` samples. Starts at `α = 0`.
    pub fn from_samples(samples: &DenseMatrix<T>, labels: &[T], c: T) -> Result<Self> {
        let m = samples.rows();
        if labels.len() != m {
            return Err(shape_err(m, labels.len()));
        }
        if let Some(i) = labels.iter().position(|&y| y != T::one() && y != -T::one()) {
            return Err(Error::InvalidParameter(format!(
                "label {i} is {}, expected ±1",
                labels[i]
            )));
        }
        let mut q = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = labels[i] * labels[j] * dot(samples.row(i), samples.row(j));
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
        Self::new(q, c)
    }

    pub fn new(q: DenseMatrix<T>, c: T) -> Result<Self> {
        let m = q.rows();
        if q.cols() != m {
            return Err(shape_err(format!("{m}x{m}"), format!("{m}x{}", q.cols())));
        }
        if !(c > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {c}"
            )));
        }
        for i in 0..m {
            if !(q[(i, i)] > T::of(DIAGONAL_FLOOR)) {
                return Err(Error::DegenerateDiagonal {
                    index: i,
                    value: q[(i, i)].to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            alpha: vec![T::zero(); m],
            q_alpha: vec![T::zero(); m],
            q,
            c,
            flops: FlopCounter::new(),
        })
    }

    pub fn q(&self) -> &DenseMatrix<T> {
        &self.q
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn set_alpha(&mut self, alpha: Vec<T>) -> Result<()> {
        if alpha.len() != self.alpha.len() {
            return Err(shape_err(self.alpha.len(), alpha.len()));
        }
        if alpha.iter().any(|&a| !(a >= T::zero() && a <= self.c)) {
            return Err(Error::InvalidParameter("alpha outside [0, C]".into()));
        }
        self.q_alpha = self.q.matvec(&alpha);
        self.alpha = alpha;
        Ok(())
    }

    /// `‖Q‖₂`, the Lipschitz constant of the full gradient.
    pub fn global_lipschitz(&self) -> T {
        spectral_norm_sq(&self.q, DEFAULT_POWER_ITERS, T::of(DEFAULT_POWER_TOL)).sqrt()
    }

    /// `+∞` outside the box.
    pub fn objective_at(&self, alpha: &[T]) -> Result<T> {
        if alpha.len() != self.alpha.len() {
            return Err(shape_err(self.alpha.len(), alpha.len()));
        }
        if alpha.iter().any(|&a| a < T::zero() || a > self.c) {
            return Ok(T::infinity());
        }
        let qa = self.q.matvec(alpha);
        Ok(T::half() * dot(alpha, &qa) - alpha.iter().copied().sum::<T>())
    }

    fn objective_cached(&self) -> T {
        self.alpha
            .iter()
            .zip(&self.q_alpha)
            .map(|(&a, &qa)| T::half() * a * qa - a)
            .sum()
    }

    /// `(Qα)_i − 1`.
    pub fn gradient(&self) -> Vec<T> {
        self.q_alpha.iter().map(|&v| v - T::one()).collect()
    }

    fn move_coordinate(&mut self, i: usize, new: T) {
        let d = new - self.alpha[i];
        if d == T::zero() {
            return;
        }
        self.alpha[i] = new;
        // Q is symmetric: column i is row i.
        for (qa, &qv) in self.q_alpha.iter_mut().zip(self.q.row(i)) {
            *qa += d * qv;
        }
        self.flops.axpy(self.alpha.len());
    }

    /// `α_i ← clip(α_i − ((Qα)_i − 1)/Q_ii, 0, C)` and `Qα ← Qα + Δ Q_{:,i}`.
    pub fn svm_coordinate_step(&mut self, i: usize) -> Result<T> {
        let m = self.alpha.len();
        if i >= m {
            return Err(Error::IndexOutOfRange { index: i, len: m });
        }
        let qii = self.q[(i, i)];
        if !(qii > T::of(DIAGONAL_FLOOR)) {
            return Err(Error::DegenerateDiagonal {
                index: i,
                value: qii.to_f64_lossy(),
            });
        }
        let g = self.q_alpha[i] - T::one();
        let new = clip(self.alpha[i] - g / qii, T::zero(), self.c);
        self.flops.scalar(3);
        self.flops.prox(1);
        self.move_coordinate(i, new);
        Ok(new)
    }

    pub fn svm_gs_scores(&self, rule: GreedyRule) -> Result<Vec<T>> {
        let zero = T::zero();
        self.alpha
            .iter()
            .zip(&self.q_alpha)
            .enumerate()
            .map(|(j, (&a, &qa))| {
                let g = qa - T::one();
                let lj = self.q[(j, j)];
                match rule {
                    GreedyRule::Gs => Ok(g.abs()),
                    GreedyRule::Gsl => Ok(g.abs() / lj.sqrt()),
                    GreedyRule::GsS => Ok(if a == zero {
                        g.min(zero).abs()
                    } else if a == self.c {
                        g.max(zero).abs()
                    } else {
                        g.abs()
                    }),
                    GreedyRule::GsR => Ok((a - clip(a - g / lj, zero, self.c)).abs()),
                    GreedyRule::GsQ => {
                        let d = clip(a - g / lj, zero, self.c) - a;
                        Ok(g * d + T::half() * lj * d * d)
                    }
                    GreedyRule::Mbi => Err(Error::UnsupportedScheme(
                        "MBI is offered for the quadratic demo and LASSO only".into(),
                    )),
                }
            })
            .collect::<Result<Vec<T>>>()
    }

    /// `‖α − clip(α − ∇F(α), 0, C)‖`.
    pub fn projected_gradient_norm(&self) -> T {
        self.alpha
            .iter()
            .zip(&self.q_alpha)
            .map(|(&a, &qa)| {
                let d = a - clip(a - (qa - T::one()), T::zero(), self.c);
                d * d
            })
            .sum::<T>()
            .sqrt()
    }

    pub fn is_feasible(&self) -> bool {
        self.alpha.iter().all(|&a| a >= T::zero() && a <= self.c)
    }

    pub fn cache_drift(&self) -> T {
        let fresh = self.q.matvec(&self.alpha);
        let scale = T::one() + crate::numeric::norm_inf(&fresh);
        fresh
            .iter()
            .zip(&self.q_alpha)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
            / scale
    }
}

impl<T: Scalar> CompositeProblem<T> for SvmDualProblem<T> {
    fn num_blocks(&self) -> usize {
        self.alpha.len()
    }

    fn block(&self, i: usize) -> Vec<T> {
        vec![self.alpha[i]]
    }

    fn set_block(&mut self, i: usize, value: &[T]) -> Result<()> {
        if value.len() != 1 {
            return Err(shape_err(1, value.len()));
        }
        self.move_coordinate(i, value[0]);
        Ok(())
    }

    fn block_gradient(&self, i: usize) -> Result<Vec<T>> {
        Ok(vec![self.q_alpha[i] - T::one()])
    }

    fn block_lipschitz(&self, i: usize) -> T {
        self.q[(i, i)]
    }

    fn block_regularizer(&self, _: usize) -> Regularizer<T> {
        Regularizer::Box {
            lo: T::zero(),
            hi: self.c,
        }
    }

    fn objective(&self) -> T {
        self.objective_cached()
    }

    fn block_argmin(&self, i: usize, prox_weight: T) -> Result<Vec<T>> {
        let g = self.q_alpha[i] - T::one();
        let h = self.q[(i, i)] + prox_weight;
        Ok(vec![clip(self.alpha[i] - g / h, T::zero(), self.c)])
    }
}

impl<T: Scalar> CoordinateProblem<T> for SvmDualProblem<T> {
    fn num_blocks(&self) -> usize {
        self.alpha.len()
    }

    fn objective(&self) -> T {
        self.objective_cached()
    }

    fn update(&mut self, i: usize) -> Result<()> {
        self.svm_coordinate_step(i).map(|_| ())
    }

    fn scores(&self, rule: GreedyRule) -> Result<Vec<T>> {
        self.svm_gs_scores(rule)
    }

    fn stationarity(&self) -> T {
        self.projected_gradient_norm()
    }

    fn variables(&self) -> Vec<T> {
        self.alpha.clone()
    }

    fn flops(&self) -> FlopCounter {
        self.flops
    }

    fn block_lipschitz_all(&self) -> Vec<T> {
        (0..self.alpha.len()).map(|i| self.q[(i, i)]).collect()
    }

    /// Projected gradient step `α ← clip(α − (Qα − 1)/‖Q‖, 0, C)` with `Qα` recomputed.
    fn full_update(&mut self) -> Result<()> {
        let m = self.alpha.len();
        let l = self.global_lipschitz();
        let qa = self.q.matvec(&self.alpha);
        for (a, &v) in self.alpha.iter_mut().zip(&qa) {
            *a = clip(*a - (v - T::one()) / l, T::zero(), self.c);
        }
        self.q_alpha = self.q.matvec(&self.alpha);
        self.flops.mat_vec(m, m);
        self.flops.scalar(3 * m);
        self.flops.prox(m);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, m: usize, n: usize, c: f64) -> SvmDualProblem<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<f64> = (0..m)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let x = DenseMatrix::from_fn(m, n, |i, j| {
            rng.random_range(-1.0..1.0) + if j == 0 { labels[i] } else { 0.0 }
        });
        SvmDualProblem::from_samples(&x, &labels, c).unwrap()
    }

    #[test]
    fn step_examples() {
        let mut p = SvmDualProblem::new(DenseMatrix::identity(3), 1.0).unwrap();
        assert_eq!(CoordinateProblem::objective(&p), 0.0);
        assert_eq!(p.svm_coordinate_step(0).unwrap(), 1.0);
        let mut p = SvmDualProblem::new(DenseMatrix::identity(3), 0.5).unwrap();
        assert_eq!(p.svm_coordinate_step(0).unwrap(), 0.5);
        // Interior optimum α = 1/2 for Q = 2I, C = 1 is a fixed point.
        let mut p = SvmDualProblem::new(DenseMatrix::from_diag(&[2.0, 2.0]), 1.0).unwrap();
        p.set_alpha(vec![0.5, 0.5]).unwrap();
        assert_eq!(p.svm_coordinate_step(1).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_diagonal_rejected() {
        let q = DenseMatrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(
            SvmDualProblem::new(q, 1.0),
            Err(Error::DegenerateDiagonal { index: 1, .. })
        ));
    }

    #[test]
    fn gs_s_examples() {
        let p = SvmDualProblem::new(DenseMatrix::identity(3), 1.0).unwrap();
        assert_eq!(
            p.svm_gs_scores(GreedyRule::GsS).unwrap(),
            vec![1.0, 1.0, 1.0]
        );
        // α_j = C with positive gradient keeps the gradient as its score.
        let mut p = SvmDualProblem::new(DenseMatrix::from_diag(&[3.0, 1.0]), 1.0).unwrap();
        p.set_alpha(vec![1.0, 0.0]).unwrap();
        let s = p.svm_gs_scores(GreedyRule::GsS).unwrap();
        assert_eq!(s[0], 2.0);
        assert_eq!(s[1], 1.0);
    }

    #[test]
    fn sweeps_descend_stay_feasible_and_converge() {
        let mut p = random_problem(1, 40, 5, 1.0);
        let mut prev = CoordinateProblem::objective(&p);
        for k in 0..40 * 500 {
            p.update(k % 40).unwrap();
            assert!(p.is_feasible());
            let f = CoordinateProblem::objective(&p);
            assert!(f <= prev + 1e-12 * (1.0 + prev.abs()));
            prev = f;
        }
        assert!(p.cache_drift() <= 1e-10);
        assert!(
            p.projected_gradient_norm() < 1e-8,
            "{}",
            p.projected_gradient_norm()
        );
        let r = p.svm_gs_scores(GreedyRule::GsR).unwrap();
        assert!(r.iter().all(|&v| v < 1e-8));
    }

    #[test]
    fn q_is_symmetric_with_sample_norms_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DenseMatrix::<f64>::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0));
        let y = [1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let p = SvmDualProblem::from_samples(&x, &y, 1.0).unwrap();
        assert_eq!(p.q().max_abs_diff(&p.q().transpose()), 0.0);
        for i in 0..6 {
            assert!((p.q()[(i, i)] - crate::numeric::norm_sq(x.row(i))).abs() < 1e-15);
        }
    }
}
