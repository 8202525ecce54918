//! Unregularized quadratic `½xᵀHx + qᵀx` with scalar blocks.

use crate::error::{shape_err, Error, Result};
use crate::numeric::{
    dot, norm, spectral_norm_sq, DenseMatrix, FlopCounter, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL,
};
use crate::prox::Regularizer;
use crate::scalar::Scalar;
use crate::schemes::CompositeProblem;
use crate::selection::GreedyRule;

use super::CoordinateProblem;

#[derive(Debug, Clone)]
pub struct QuadraticProblem<T> {
    h: DenseMatrix<T>,
    q: Vec<T>,
    x: Vec<T>,
    /// Maintained `Hx + q`.
    grad: Vec<T>,
    flops: FlopCounter,
}

impl<T: Scalar> QuadraticProblem<T> {
    /// `H` must be symmetric with a positive diagonal.
    pub fn new(h: DenseMatrix<T>, q: Vec<T>, x0: Vec<T>) -> Result<Self> {
        let n = h.rows();
        if h.cols() != n {
            return Err(shape_err(
                format!("{n}x{n}"),
                format!("{}x{}", h.rows(), h.cols()),
            ));
        }
        if q.len() != n {
            return Err(shape_err(n, q.len()));
        }
        if x0.len() != n {
            return Err(shape_err(n, x0.len()));
        }
        for i in 0..n {
            if !(h[(i, i)] > T::zero()) {
                return Err(Error::DegenerateDiagonal {
                    index: i,
                    value: h[(i, i)].to_f64_lossy(),
                });
            }
            for j in 0..i {
                if h[(i, j)] != h[(j, i)] {
                    return Err(Error::InvalidParameter(format!(
                        "H is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let mut p = Self {
            grad: vec![T::zero(); n],
            h,
            q,
            x: x0,
            flops: FlopCounter::new(),
        };
        p.refresh_gradient();
        Ok(p)
    }

    /// `f(x, y) = 7x² + 6xy + 8y²` started at `(8, −6)`.
    pub fn demo() -> Self {
        let h =
            DenseMatrix::from_rows(&[vec![T::of(14.0), T::of(6.0)], vec![T::of(6.0), T::of(16.0)]])
                .expect("2x2");
        Self::new(h, vec![T::zero(); 2], vec![T::of(8.0), T::of(-6.0)]).expect("valid demo")
    }

    fn refresh_gradient(&mut self) {
        self.grad = self.h.matvec(&self.x);
        for (g, &qv) in self.grad.iter_mut().zip(&self.q) {
            *g += qv;
        }
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn h(&self) -> &DenseMatrix<T> {
        &self.h
    }

    pub fn objective_at(&self, x: &[T]) -> Result<T> {
        if x.len() != self.x.len() {
            return Err(shape_err(self.x.len(), x.len()));
        }
        Ok(T::half() * dot(x, &self.h.matvec(x)) + dot(&self.q, x))
    }

    /// `argmin_t f(x with x_i = t) + (ρ/2)(t − x_i)²`.
    pub fn coordinate_argmin(&self, i: usize, rho: T) -> T {
        let hii = self.h[(i, i)];
        // Remove the diagonal contribution from the maintained gradient.
        let off = self.grad[i] - hii * self.x[i];
        (rho * self.x[i] - off) / (hii + rho)
    }

    fn write(&mut self, i: usize, v: T) {
        let d = v - self.x[i];
        self.x[i] = v;
        let col = self.h.row(i);
        for (g, &hv) in self.grad.iter_mut().zip(col) {
            *g += hv * d;
        }
    }
}

impl<T: Scalar> CompositeProblem<T> for QuadraticProblem<T> {
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
        self.write(i, value[0]);
        Ok(())
    }

    fn block_gradient(&self, i: usize) -> Result<Vec<T>> {
        Ok(vec![self.grad[i]])
    }

    fn block_lipschitz(&self, i: usize) -> T {
        self.h[(i, i)]
    }

    fn block_regularizer(&self, _: usize) -> Regularizer<T> {
        Regularizer::Zero
    }

    fn objective(&self) -> T {
        T::half() * (dot(&self.x, &self.grad) + dot(&self.q, &self.x))
    }

    fn block_argmin(&self, i: usize, prox_weight: T) -> Result<Vec<T>> {
        Ok(vec![self.coordinate_argmin(i, prox_weight)])
    }
}

impl<T: Scalar> CoordinateProblem<T> for QuadraticProblem<T> {
    fn num_blocks(&self) -> usize {
        self.x.len()
    }

    fn objective(&self) -> T {
        CompositeProblem::objective(self)
    }

    fn update(&mut self, i: usize) -> Result<()> {
        if i >= self.x.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.x.len(),
            });
        }
        let v = self.coordinate_argmin(i, T::zero());
        self.write(i, v);
        let n = self.x.len();
        self.flops.scalar(4);
        self.flops.axpy(n);
        Ok(())
    }

    fn scores(&self, rule: GreedyRule) -> Result<Vec<T>> {
        let n = self.x.len();
        let f = CompositeProblem::objective(self);
        Ok((0..n)
            .map(|i| {
                let g = self.grad[i];
                let l = self.h[(i, i)];
                match rule {
                    GreedyRule::Gsl => g.abs() / l.sqrt(),
                    // Exact coordinate minimization decreases f by g²/(2H_ii).
                    GreedyRule::Mbi => f - g * g / (T::two() * l),
                    GreedyRule::GsQ => -g * g / (T::two() * l),
                    GreedyRule::GsR => g.abs() / l,
                    GreedyRule::Gs | GreedyRule::GsS => g.abs(),
                }
            })
            .collect())
    }

    fn stationarity(&self) -> T {
        norm(&self.grad)
    }

    fn variables(&self) -> Vec<T> {
        self.x.clone()
    }

    fn flops(&self) -> FlopCounter {
        self.flops
    }

    fn block_lipschitz_all(&self) -> Vec<T> {
        (0..self.x.len()).map(|i| self.h[(i, i)]).collect()
    }

    /// Gradient step with `1/‖H‖₂`.
    fn full_update(&mut self) -> Result<()> {
        let n = self.x.len();
        let l = spectral_norm_sq(&self.h, DEFAULT_POWER_ITERS, T::of(DEFAULT_POWER_TOL)).sqrt();
        for (x, &g) in self.x.iter_mut().zip(&self.grad) {
            *x -= g / l;
        }
        self.refresh_gradient();
        self.flops.axpy(n);
        self.flops.mat_vec(n, n);
        self.flops.elementwise(n);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::coordinate_argmin_step;

    #[test]
    fn demo_half_steps() {
        let mut p = QuadraticProblem::<f64>::demo();
        let x = coordinate_argmin_step(&mut p, 0, 0.0).unwrap()[0];
        assert!((x - 18.0 / 7.0).abs() < 1e-12);
        let y = coordinate_argmin_step(&mut p, 1, 0.0).unwrap()[0];
        assert!((y + 27.0 / 28.0).abs() < 1e-12);
    }

    #[test]
    fn demo_objective_matches_closed_form() {
        let p = QuadraticProblem::<f64>::demo();
        let f = 7.0 * 64.0 + 6.0 * 8.0 * -6.0 + 8.0 * 36.0;
        assert!((CompositeProblem::objective(&p) - f).abs() < 1e-12);
        assert!((p.objective_at(&[8.0, -6.0]).unwrap() - f).abs() < 1e-12);
    }

    #[test]
    fn cyclic_minimization_converges() {
        let mut p = QuadraticProblem::<f64>::demo();
        for k in 0..120 {
            let before = CompositeProblem::objective(&p);
            p.update(k % 2).unwrap();
            assert!(CompositeProblem::objective(&p) <= before + 1e-12);
        }
        assert!(norm(p.x()) < 1e-8);
    }

    #[test]
    fn proximal_point_example() {
        let p = QuadraticProblem::<f64>::demo();
        // (ρ·8 − 6·(−6))/(14 + ρ) with ρ = 14.
        assert!((p.coordinate_argmin(0, 14.0) - (112.0 + 36.0) / 28.0).abs() < 1e-12);
        let mut q = p.clone();
        assert_eq!(
            coordinate_argmin_step(&mut q, 0, f64::INFINITY).unwrap(),
            vec![8.0]
        );
    }

    #[test]
    fn mbi_scores_are_post_update_objectives() {
        let p = QuadraticProblem::<f64>::demo();
        let s = p.scores(GreedyRule::Mbi).unwrap();
        for i in 0..2 {
            let mut q = p.clone();
            q.update(i).unwrap();
            assert!((s[i] - CompositeProblem::objective(&q)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let h = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(QuadraticProblem::new(h, vec![0.0; 2], vec![0.0; 2]).is_err());
        let h = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            QuadraticProblem::new(h, vec![0.0; 2], vec![0.0; 2]),
            Err(Error::DegenerateDiagonal { index: 0, .. })
        ));
    }
}
