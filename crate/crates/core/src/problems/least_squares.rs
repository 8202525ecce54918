//! Least squares `½‖Ax − b‖²` with cached `AᵀA`, `Aᵀb` and `M(x) = AᵀAx`.

use crate::error::{shape_err, Error, Result};
use crate::numeric::{
    norm, spectral_norm_sq, BlockPartition, DenseMatrix, FlopCounter, DEFAULT_POWER_ITERS,
    DEFAULT_POWER_TOL,
};
use crate::prox::Regularizer;
use crate::scalar::Scalar;
use crate::schemes::CompositeProblem;
use crate::selection::GreedyRule;

use super::CoordinateProblem;

#[derive(Debug, Clone)]
struct Cache<T> {
    gram: DenseMatrix<T>,
    atb: Vec<T>,
    m: Vec<T>,
    /// `‖A‖₂²`, the full-gradient Lipschitz constant.
    l: T,
}

#[derive(Debug, Clone)]
pub struct LeastSquaresProblem<T> {
    a: DenseMatrix<T>,
    b: Vec<T>,
    x: Vec<T>,
    partition: BlockPartition,
    block_l: Vec<T>,
    cache: Option<Cache<T>>,
    flops: FlopCounter,
}

impl<T: Scalar> LeastSquaresProblem<T> {
    /// Starts at `x = 0` with `s` contiguous blocks; call
    /// [`LeastSquaresProblem::init_cache`] before coordinate steps.
    pub fn new(a: DenseMatrix<T>, b: Vec<T>, s: usize) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(shape_err(a.rows(), b.len()));
        }
        let partition = BlockPartition::new(a.cols(), s)?;
        let block_l = partition
            .blocks()
            .map(|r| {
                let sub = DenseMatrix::from_fn(a.rows(), r.len(), |i, j| a[(i, r.start + j)]);
                spectral_norm_sq(&sub, DEFAULT_POWER_ITERS, T::of(DEFAULT_POWER_TOL))
            })
            .collect();
        Ok(Self {
            x: vec![T::zero(); a.cols()],
            a,
            b,
            partition,
            block_l,
            cache: None,
            flops: FlopCounter::new(),
        })
    }

    /// Precomputes `AᵀA`, `Aᵀb` and `M(x)`.
    pub fn init_cache(&mut self) {
        let gram = self.a.gram();
        let atb = self.a.matvec_t(&self.b);
        let m = gram.matvec(&self.x);
        let l = spectral_norm_sq(&self.a, DEFAULT_POWER_ITERS, T::of(DEFAULT_POWER_TOL));
        self.cache = Some(Cache { gram, atb, m, l });
    }

    pub fn with_cache(mut self) -> Self {
        self.init_cache();
        self
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn set_x(&mut self, x: Vec<T>) -> Result<()> {
        if x.len() != self.x.len() {
            return Err(shape_err(self.x.len(), x.len()));
        }
        self.x = x;
        if let Some(c) = self.cache.as_mut() {
            c.m = c.gram.matvec(&self.x);
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[T]) -> Result<T> {
        if x.len() != self.x.len() {
            return Err(shape_err(self.x.len(), x.len()));
        }
        let r: Vec<T> = self
            .a
            .matvec(x)
            .iter()
            .zip(&self.b)
            .map(|(&p, &q)| p - q)
            .collect();
        Ok(T::half() * crate::numeric::norm_sq(&r))
    }

    fn cache(&self) -> Result<&Cache<T>> {
        self.cache
            .as_ref()
            .ok_or_else(|| Error::Cache("AᵀA cache not initialized".into()))
    }

    fn grad_block(&self, i: usize) -> Result<Vec<T>> {
        let c = self.cache()?;
        Ok(self.partition.block(i).map(|k| c.m[k] - c.atb[k]).collect())
    }

    /// Block gradient step `x_i ← x_i − α (M(x) − Aᵀb)_i` followed by
    /// `M ← M + (AᵀA)_{:,i} Δ_i`.
    pub fn ls_coordinate_step(&mut self, i: usize, alpha: T) -> Result<Vec<T>> {
        if !(alpha > T::zero()) {
            return Err(Error::InvalidStep(alpha.to_f64_lossy()));
        }
        if i >= self.partition.num_blocks() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.partition.num_blocks(),
            });
        }
        let g = self.grad_block(i)?;
        let range = self.partition.block(i);
        let bl = range.len();
        let n = self.x.len();
        let delta: Vec<T> = g.iter().map(|&v| -alpha * v).collect();
        let c = self.cache.as_mut().expect("checked above");
        for (k, &d) in range.clone().zip(&delta) {
            self.x[k] += d;
            // AᵀA is symmetric, so its column k is row k.
            let row = c.gram.row(k);
            for (mv, &gv) in c.m.iter_mut().zip(row) {
                *mv += gv * d;
            }
        }
        self.flops.elementwise(bl); // gradient block
        self.flops.scalar(2 * bl); // step and update of x
        self.flops.mat_vec(n, bl);
        self.flops.elementwise(n);
        Ok(self.x[range].to_vec())
    }

    /// Largest relative deviation of the cached `M(x)` from `AᵀAx`.
    pub fn cache_drift(&self) -> Result<T> {
        let c = self.cache()?;
        let fresh = c.gram.matvec(&self.x);
        let scale = T::one() + crate::numeric::norm_inf(&fresh);
        Ok(fresh
            .iter()
            .zip(&c.m)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
            / scale)
    }

    fn full_gradient(&self) -> Result<Vec<T>> {
        let c = self.cache()?;
        Ok(c.m.iter().zip(&c.atb).map(|(&a, &b)| a - b).collect())
    }
}

impl<T: Scalar> CompositeProblem<T> for LeastSquaresProblem<T> {
    fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    fn block(&self, i: usize) -> Vec<T> {
        self.x[self.partition.block(i)].to_vec()
    }

    fn set_block(&mut self, i: usize, value: &[T]) -> Result<()> {
        let range = self.partition.block(i);
        if value.len() != range.len() {
            return Err(shape_err(range.len(), value.len()));
        }
        for (k, &v) in range.zip(value) {
            let d = v - self.x[k];
            self.x[k] = v;
            if let Some(c) = self.cache.as_mut() {
                let row = c.gram.row(k);
                for (mv, &gv) in c.m.iter_mut().zip(row) {
                    *mv += gv * d;
                }
            }
        }
        Ok(())
    }

    fn block_gradient(&self, i: usize) -> Result<Vec<T>> {
        if self.cache.is_some() {
            return self.grad_block(i);
        }
        let r: Vec<T> = self
            .a
            .matvec(&self.x)
            .iter()
            .zip(&self.b)
            .map(|(&p, &q)| p - q)
            .collect();
        Ok(self
            .partition
            .block(i)
            .map(|k| {
                (0..self.a.rows())
                    .map(|row| self.a[(row, k)] * r[row])
                    .sum()
            })
            .collect())
    }

    fn block_lipschitz(&self, i: usize) -> T {
        self.block_l[i]
    }

    fn block_regularizer(&self, _: usize) -> Regularizer<T> {
        Regularizer::Zero
    }

    fn objective(&self) -> T {
        self.objective_at(&self.x).expect("own shape")
    }
}

impl<T: Scalar> CoordinateProblem<T> for LeastSquaresProblem<T> {
    fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    fn objective(&self) -> T {
        CompositeProblem::objective(self)
    }

    fn update(&mut self, i: usize) -> Result<()> {
        let l = self.block_l[i];
        if !(l > T::zero()) {
            return Err(Error::InvalidLipschitz {
                index: i,
                value: l.to_f64_lossy(),
            });
        }
        self.ls_coordinate_step(i, T::one() / l).map(|_| ())
    }

    fn scores(&self, rule: GreedyRule) -> Result<Vec<T>> {
        let g = self.full_gradient()?;
        let norms: Vec<T> = self.partition.blocks().map(|r| norm(&g[r])).collect();
        match rule {
            // With no regularizer the subgradient score is the gradient norm.
            GreedyRule::Gs | GreedyRule::GsS => Ok(norms),
            GreedyRule::Gsl => crate::selection::gsl_scores(&norms, &self.block_l),
            other => Err(Error::UnsupportedScheme(format!(
                "{} is not available for least squares",
                other.name()
            ))),
        }
    }

    fn stationarity(&self) -> T {
        match self.full_gradient() {
            Ok(g) => norm(&g),
            Err(_) => T::nan(),
        }
    }

    fn variables(&self) -> Vec<T> {
        self.x.clone()
    }

    fn flops(&self) -> FlopCounter {
        self.flops
    }

    fn block_lipschitz_all(&self) -> Vec<T> {
        self.block_l.clone()
    }

    /// Full gradient step `x ← x − (AᵀAx − Aᵀb)/L` with `L = ‖A‖₂²`.
    fn full_update(&mut self) -> Result<()> {
        let n = self.x.len();
        let (g, l) = {
            let c = self.cache()?;
            let gx = c.gram.matvec(&self.x);
            (
                gx.iter()
                    .zip(&c.atb)
                    .map(|(&a, &b)| a - b)
                    .collect::<Vec<T>>(),
                c.l,
            )
        };
        for (x, gv) in self.x.iter_mut().zip(&g) {
            *x -= *gv / l;
        }
        let c = self.cache.as_mut().expect("checked");
        c.m = c.gram.matvec(&self.x);
        self.flops.mat_vec(n, n);
        self.flops.elementwise(n);
        self.flops.scalar(2 * n);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coordinate_step_examples() {
        let mut p = LeastSquaresProblem::new(DenseMatrix::identity(2), vec![4.0, 0.0], 2)
            .unwrap()
            .with_cache();
        p.ls_coordinate_step(0, 1.0).unwrap();
        assert_eq!(p.x(), &[4.0, 0.0]);
        assert!(p.cache_drift().unwrap() == 0.0);

        let mut p = LeastSquaresProblem::new(DenseMatrix::identity(2), vec![1.0, -2.0], 1)
            .unwrap()
            .with_cache();
        p.set_x(vec![1.0, -2.0]).unwrap();
        p.ls_coordinate_step(0, 0.5).unwrap();
        assert_eq!(p.x(), &[1.0, -2.0]);
    }

    #[test]
    fn missing_cache_is_an_error() {
        let mut p = LeastSquaresProblem::new(DenseMatrix::identity(2), vec![4.0, 0.0], 2).unwrap();
        assert!(matches!(p.ls_coordinate_step(0, 1.0), Err(Error::Cache(_))));
    }

    #[test]
    fn cache_tracks_random_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DenseMatrix::from_fn(30, 20, |_, _| rng.random_range(-1.0..1.0));
        let b: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut p = LeastSquaresProblem::new(a, b, 7).unwrap().with_cache();
        let mut prev = CompositeProblem::objective(&p);
        for k in 0..1000 {
            CoordinateProblem::update(&mut p, k % 7).unwrap();
            let f = CompositeProblem::objective(&p);
            assert!(f <= prev + 1e-12);
            prev = f;
        }
        assert!(p.cache_drift().unwrap() <= 1e-9);
    }
}
