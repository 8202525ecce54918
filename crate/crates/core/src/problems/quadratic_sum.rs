//! `f(x) = (1/m) Σ_j ½ Σ_k a_jk (x_k − c_jk)²`, a finite sum of separable
//! strongly convex quadratics with a closed-form minimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::Range;

use crate::error::{shape_err, Error, Result};
use crate::prox::Regularizer;
use crate::scalar::Scalar;
use crate::schemes::{CompositeProblem, FiniteSum};

#[derive(Debug, Clone)]
pub struct QuadraticSum<T> {
    /// Curvatures, one row per sample.
    a: Vec<Vec<T>>,
    /// Centers, one row per sample.
    c: Vec<Vec<T>>,
    x: Vec<T>,
}

impl<T: Scalar> QuadraticSum<T> {
    pub fn new(a: Vec<Vec<T>>, c: Vec<Vec<T>>, x0: Vec<T>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if a.len() != c.len() {
            return Err(shape_err(a.len(), c.len()));
        }
        let n = x0.len();
        for (ra, rc) in a.iter().zip(&c) {
            if ra.len() != n || rc.len() != n {
                return Err(shape_err(n, ra.len().max(rc.len())));
            }
            if ra.iter().any(|&v| !(v > T::zero())) {
                return Err(Error::InvalidParameter(
                    "curvatures must be positive".into(),
                ));
            }
        }
        Ok(Self { a, c, x: x0 })
    }

    /// `m` samples in dimension `n`: curvatures uniform on `[0.5, 1.5]`,
    /// centers uniform on `[−10, 10]`, start at zero.
    pub fn random(m: usize, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (0..m)
            .map(|_| (0..n).map(|_| T::of(rng.random_range(0.5..=1.5))).collect())
            .collect();
        let c = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| T::of(rng.random_range(-10.0..10.0)))
                    .collect()
            })
            .collect();
        Self::new(a, c, vec![T::zero(); n])
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn objective_at(&self, x: &[T]) -> T {
        let m = T::of_usize(self.a.len());
        self.a
            .iter()
            .zip(&self.c)
            .map(|(ra, rc)| {
                T::half()
                    * ra.iter()
                        .zip(rc)
                        .zip(x)
                        .map(|((&a, &c), &xk)| a * (xk - c) * (xk - c))
                        .sum::<T>()
            })
            .sum::<T>()
            / m
    }

    /// `x*_k = Σ_j a_jk c_jk / Σ_j a_jk`.
    pub fn minimizer(&self) -> Vec<T> {
        (0..self.dim())
            .map(|k| {
                let (num, den) = self
                    .a
                    .iter()
                    .zip(&self.c)
                    .fold((T::zero(), T::zero()), |(n, d), (ra, rc)| {
                        (n + ra[k] * rc[k], d + ra[k])
                    });
                num / den
            })
            .collect()
    }

    pub fn optimal_value(&self) -> T {
        self.objective_at(&self.minimizer())
    }

    /// Full gradient `(1/m) Σ_j a_j ∘ (x − c_j)` at `x`.
    pub fn full_gradient(&self, x: &[T]) -> Vec<T> {
        let m = T::of_usize(self.a.len());
        let mut g = vec![T::zero(); self.dim()];
        for (ra, rc) in self.a.iter().zip(&self.c) {
            for k in 0..g.len() {
                g[k] += ra[k] * (x[k] - rc[k]);
            }
        }
        g.iter_mut().for_each(|v| *v /= m);
        g
    }

    /// Mean curvature of coordinate `k`.
    fn mean_curvature(&self, k: usize) -> T {
        self.a.iter().map(|r| r[k]).sum::<T>() / T::of_usize(self.a.len())
    }
}

impl<T: Scalar> CompositeProblem<T> for QuadraticSum<T> {
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
        self.x[i] = value[0];
        Ok(())
    }

    fn block_gradient(&self, i: usize) -> Result<Vec<T>> {
        Ok(vec![self.full_gradient(&self.x)[i]])
    }

    fn block_lipschitz(&self, i: usize) -> T {
        self.mean_curvature(i)
    }

    fn block_regularizer(&self, _: usize) -> Regularizer<T> {
        Regularizer::Zero
    }

    fn objective(&self) -> T {
        self.objective_at(&self.x)
    }
}

impl<T: Scalar> FiniteSum<T> for QuadraticSum<T> {
    fn num_samples(&self) -> usize {
        self.a.len()
    }

    fn point(&self) -> Vec<T> {
        self.x.clone()
    }

    fn block_range(&self, i: usize) -> Range<usize> {
        i..i + 1
    }

    fn sample_gradient(&self, j: usize, point: &[T]) -> Result<Vec<T>> {
        if j >= self.a.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.a.len(),
            });
        }
        if point.len() != self.dim() {
            return Err(shape_err(self.dim(), point.len()));
        }
        Ok(self.a[j]
            .iter()
            .zip(&self.c[j])
            .zip(point)
            .map(|((&a, &c), &x)| a * (x - c))
            .collect())
    }

    fn sample_lipschitz(&self, j: usize) -> T {
        self.a[j].iter().fold(T::zero(), |m, &v| m.max(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizer_zeroes_gradient() {
        let p = QuadraticSum::<f64>::random(50, 3, 4).unwrap();
        let g = p.full_gradient(&p.minimizer());
        assert!(g.iter().all(|v| v.abs() < 1e-12));
        let mut shifted = p.minimizer();
        shifted[1] += 0.1;
        assert!(p.objective_at(&shifted) > p.optimal_value());
    }

    #[test]
    fn sample_gradients_average_to_full() {
        let p = QuadraticSum::<f64>::random(20, 2, 9).unwrap();
        let x = [1.5, -2.0];
        let mut avg = [0.0; 2];
        for j in 0..20 {
            let g = p.sample_gradient(j, &x).unwrap();
            avg[0] += g[0] / 20.0;
            avg[1] += g[1] / 20.0;
        }
        let full = p.full_gradient(&x);
        assert!((avg[0] - full[0]).abs() < 1e-12 && (avg[1] - full[1]).abs() < 1e-12);
    }

    #[test]
    fn hand_example() {
        let p = QuadraticSum::<f64>::new(
            vec![vec![1.0], vec![3.0]],
            vec![vec![0.0], vec![4.0]],
            vec![0.0],
        )
        .unwrap();
        assert_eq!(p.minimizer(), vec![3.0]);
        // ½(1·9 + 3·1)/2
        assert!((p.optimal_value() - 3.0).abs() < 1e-15);
        assert_eq!(p.sample_lipschitz(1), 3.0);
        assert_eq!(p.block_lipschitz(0), 2.0);
    }
}
