//! Seeded synthetic instances. Every generator is a pure function of its
//! arguments.

use coordesc::{Lasso, Logistic, Matrix, Nmf, SvmDual};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone)]
pub struct LassoInstance {
    pub a: Matrix,
    pub b: Vec<f64>,
    /// Planted sparse signal.
    pub x_s: Vec<f64>,
    pub lambda: f64,
}

impl LassoInstance {
    pub fn problem(&self) -> Result<Lasso> {
        Ok(Lasso::new(&self.a, self.b.clone(), self.lambda)?)
    }
}

/// `A` with i.i.d. standard normal entries, a support of size `k` chosen by a
/// random permutation with nonzeros drawn from `N(0, 2)` (variance 2), and
/// `b = A x_s + σ ε`.
pub fn gen_lasso(
    m: usize,
    n: usize,
    k: usize,
    sigma: f64,
    lambda: f64,
    seed: u64,
) -> Result<LassoInstance> {
    if k > n {
        return Err(BenchError::InvalidSupport { k, n });
    }
    if !(sigma >= 0.0) {
        return Err(BenchError::InvalidConfig(format!(
            "noise level {sigma} must be nonnegative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let nonzero = Normal::new(0.0, 2f64.sqrt()).expect("positive std");
    let mut x_s = vec![0.0; n];
    for &j in &perm[..k] {
        // Redraw exact zeros so the support size is exactly k.
        let mut v = 0.0;
        while v == 0.0 {
            v = nonzero.sample(&mut rng);
        }
        x_s[j] = v;
    }
    let mut b = a.matvec(&x_s);
    if sigma > 0.0 {
        for bi in &mut b {
            let e: f64 = StandardNormal.sample(&mut rng);
            *bi += sigma * e;
        }
    }
    Ok(LassoInstance { a, b, x_s, lambda })
}

#[derive(Debug, Clone)]
pub struct NmfInstance {
    pub m: Matrix,
    pub x_star: Matrix,
    pub y_star: Matrix,
}

impl NmfInstance {
    pub fn rank(&self) -> usize {
        self.x_star.cols()
    }

    /// Random nonnegative start drawn from `init_seed`.
    pub fn problem(&self, init_seed: u64) -> Result<Nmf> {
        Ok(Nmf::random_init(self.m.clone(), self.rank(), init_seed)?)
    }
}

/// `M = X* Y*ᵀ` with planted factors uniform on `(0, 1]`.
pub fn gen_nmf(m: usize, n: usize, r: usize, seed: u64) -> Result<NmfInstance> {
    let max = m.min(n);
    if r == 0 || r > max {
        return Err(BenchError::InvalidRank { rank: r, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0, 1.0).expect("nonempty range");
    let mut draw = || 1.0 - unit.sample(&mut rng);
    let x_star = Matrix::from_fn(m, r, |_, _| draw());
    let y_star = Matrix::from_fn(n, r, |_, _| draw());
    let prod = x_star.matmul(&y_star.transpose());
    Ok(NmfInstance {
        m: prod,
        x_star,
        y_star,
    })
}

/// Two Gaussian classes with identity covariance in `n` dimensions, centred
/// at `±(separation/2) e₁`; the first `m/2` rows are labelled `+1`.
#[derive(Debug, Clone)]
pub struct ClassificationData {
    pub samples: Matrix,
    pub labels: Vec<f64>,
}

pub fn gen_classes(m: usize, n: usize, separation: f64, seed: u64) -> Result<ClassificationData> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(BenchError::InvalidCount(m));
    }
    if n == 0 {
        return Err(BenchError::InvalidConfig(
            "feature count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = m / 2;
    let labels: Vec<f64> = (0..m).map(|i| if i < half { 1.0 } else { -1.0 }).collect();
    let samples = Matrix::from_fn(m, n, |i, j| {
        let z: f64 = StandardNormal.sample(&mut rng);
        if j == 0 {
            z + labels[i] * separation / 2.0
        } else {
            z
        }
    });
    Ok(ClassificationData { samples, labels })
}

/// Planar two-class data for sparse logistic regression.
pub fn gen_logistic(
    m: usize,
    separation: f64,
    c: f64,
    seed: u64,
) -> Result<(Logistic, ClassificationData)> {
    let data = gen_classes(m, 2, separation, seed)?;
    let p = Logistic::new(&data.samples, data.labels.clone(), c)?;
    Ok((p, data))
}

pub fn gen_svm(
    m: usize,
    n: usize,
    separation: f64,
    c: f64,
    seed: u64,
) -> Result<(SvmDual, ClassificationData)> {
    let data = gen_classes(m, n, separation, seed)?;
    let p = SvmDual::from_samples(&data.samples, &data.labels, c)?;
    Ok((p, data))
}
