//! Nonnegative matrix factorization `½‖M − XYᵀ‖_F²` with `X, Y ≥ 0`, updated
//! one column at a time by projected gradient steps.
//!
//! Blocks `0..r` are the columns of `X`, blocks `r..2r` those of `Y`. The
//! caches are `MY`, `MᵀX`, `YᵀY` and `XᵀX`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Error, Result};
use crate::numeric::{dot, norm, norm_sq, DenseMatrix, FlopCounter};
use crate::prox::Regularizer;
use crate::scalar::Scalar;
use crate::schemes::CompositeProblem;
use crate::selection::GreedyRule;

use super::CoordinateProblem;

/// Squared column norms below this trigger the safeguarded step `η = 1/ε`.
pub const SAFEGUARD_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

#[derive(Debug, Clone)]
pub struct NmfProblem<T> {
    m: DenseMatrix<T>,
    mt: DenseMatrix<T>,
    r: usize,
    x: DenseMatrix<T>,
    y: DenseMatrix<T>,
    my: DenseMatrix<T>,
    mtx: DenseMatrix<T>,
    yty: DenseMatrix<T>,
    xtx: DenseMatrix<T>,
    m_norm_sq: T,
    safeguarded: usize,
    zero_columns: usize,
    flops: FlopCounter,
}

fn gram_of<T: Scalar>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    a.gram()
}

impl<T: Scalar> NmfProblem<T> {
    /// Uses the given factors as the starting point.
    pub fn with_factors(m: DenseMatrix<T>, x: DenseMatrix<T>, y: DenseMatrix<T>) -> Result<Self> {
        let (rows, cols) = m.shape();
        let r = x.cols();
        if r == 0 {
            return Err(Error::InvalidParameter("rank must be at least 1".into()));
        }
        if x.rows() != rows || y.rows() != cols || y.cols() != r {
            return Err(shape_err(
                format!("X {rows}x{r}, Y {cols}x{r}"),
                format!("X {}x{}, Y {}x{}", x.rows(), x.cols(), y.rows(), y.cols()),
            ));
        }
        if m.as_slice().iter().any(|&v| !(v >= T::zero())) {
            return Err(Error::InvalidParameter(
                "M must be entrywise nonnegative".into(),
            ));
        }
        if x.as_slice()
            .iter()
            .chain(y.as_slice())
            .any(|&v| !(v >= T::zero()))
        {
            return Err(Error::InvalidParameter(
                "factors must be entrywise nonnegative".into(),
            ));
        }
        let mt = m.transpose();
        let m_norm_sq = m.frobenius_sq();
        let mut p = Self {
            my: DenseMatrix::zeros(rows, r),
            mtx: DenseMatrix::zeros(cols, r),
            yty: DenseMatrix::zeros(r, r),
            xtx: DenseMatrix::zeros(r, r),
            m,
            mt,
            r,
            x,
            y,
            m_norm_sq,
            safeguarded: 0,
            zero_columns: 0,
            flops: FlopCounter::new(),
        };
        p.rebuild_caches();
        Ok(p)
    }

    /// Factors drawn uniformly from `(0, 1]`, followed by one normalization pass.
    pub fn random_init(m: DenseMatrix<T>, r: usize, seed: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter("rank must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || T::of(1.0 - rng.random::<f64>());
        let x = DenseMatrix::from_fn(m.rows(), r, |_, _| draw());
        let y = DenseMatrix::from_fn(m.cols(), r, |_, _| draw());
        let mut p = Self::with_factors(m, x, y)?;
        p.nmf_normalize();
        Ok(p)
    }

    fn rebuild_caches(&mut self) {
        self.my = self.m.matmul(&self.y);
        self.mtx = self.mt.matmul(&self.x);
        self.yty = gram_of(&self.y);
        self.xtx = gram_of(&self.x);
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn x(&self) -> &DenseMatrix<T> {
        &self.x
    }

    pub fn y(&self) -> &DenseMatrix<T> {
        &self.y
    }

    pub fn m(&self) -> &DenseMatrix<T> {
        &self.m
    }

    /// Steps that fell back to the safeguard.
    pub fn safeguarded_steps(&self) -> usize {
        self.safeguarded
    }

    /// Zero `X` columns met during normalization.
    pub fn zero_columns(&self) -> usize {
        self.zero_columns
    }

    fn side_of(&self, block: usize) -> (Side, usize) {
        if block < self.r {
            (Side::X, block)
        } else {
            (Side::Y, block - self.r)
        }
    }

    pub fn block_index(&self, side: Side, j: usize) -> usize {
        match side {
            Side::X => j,
            Side::Y => self.r + j,
        }
    }

    /// `½‖M − XYᵀ‖_F²` computed directly.
    pub fn objective_direct(&self) -> T {
        let (rows, cols) = self.m.shape();
        let mut acc = T::zero();
        for i in 0..rows {
            let xi = self.x.row(i);
            for (j, &mij) in self.m.row(i).iter().enumerate() {
                let d = mij - dot(xi, self.y.row(j));
                acc += d * d;
            }
        }
        let _ = cols;
        T::half() * acc
    }

    /// `½(‖M‖² − 2⟨X, MY⟩ + ⟨XᵀX, YᵀY⟩)` from the caches.
    pub fn objective_cached(&self) -> T {
        let cross = dot(self.x.as_slice(), self.my.as_slice());
        let quad = dot(self.xtx.as_slice(), self.yty.as_slice());
        (T::half() * (self.m_norm_sq - T::two() * cross + quad)).max(T::zero())
    }

    /// `‖M − XYᵀ‖_F / ‖M‖_F`.
    pub fn relative_error(&self) -> T {
        (T::two() * self.objective_direct()).sqrt() / self.m_norm_sq.sqrt()
    }

    /// `∇_{X_j} = X(YᵀY)_j − (MY)_j` or `∇_{Y_j} = Y(XᵀX)_j − (MᵀX)_j`.
    pub fn partial_gradient(&self, side: Side, j: usize) -> Vec<T> {
        let (f, g, c) = match side {
            Side::X => (&self.x, &self.yty, &self.my),
            Side::Y => (&self.y, &self.xtx, &self.mtx),
        };
        (0..f.rows())
            .map(|i| {
                let fi = f.row(i);
                let mut v = -c[(i, j)];
                for k in 0..self.r {
                    v += fi[k] * g[(k, j)];
                }
                v
            })
            .collect()
    }

    /// `η = 1/‖opposite column‖²`, or `1/ε` when that norm is below `ε`.
    fn step_size(&self, side: Side, j: usize) -> (T, bool) {
        let opp = match side {
            Side::X => self.yty[(j, j)],
            Side::Y => self.xtx[(j, j)],
        };
        let eps = T::of(SAFEGUARD_EPS);
        if opp < eps {
            (T::one() / eps, true)
        } else {
            (T::one() / opp, false)
        }
    }

    /// Current column `j` of the factor on `side`.
    pub fn column(&self, side: Side, j: usize) -> Vec<T> {
        match side {
            Side::X => self.x.col(j),
            Side::Y => self.y.col(j),
        }
    }

    fn write_column(&mut self, side: Side, j: usize, col: &[T]) {
        let (rows, cols) = self.m.shape();
        match side {
            Side::X => {
                self.x.set_col(j, col);
                // MᵀX_j and the j-th row/column of XᵀX.
                let mut v = vec![T::zero(); cols];
                for (i, &xi) in col.iter().enumerate() {
                    if xi != T::zero() {
                        for (a, &mij) in v.iter_mut().zip(self.m.row(i)) {
                            *a += xi * mij;
                        }
                    }
                }
                self.mtx.set_col(j, &v);
                for k in 0..self.r {
                    let g = (0..rows).map(|i| self.x[(i, k)] * col[i]).sum::<T>();
                    self.xtx[(k, j)] = g;
                    self.xtx[(j, k)] = g;
                }
                self.flops.mat_vec(cols, rows);
                self.flops.mat_vec(self.r, rows);
            }
            Side::Y => {
                self.y.set_col(j, col);
                let mut v = vec![T::zero(); rows];
                for (l, &yl) in col.iter().enumerate() {
                    if yl != T::zero() {
                        for (a, &mli) in v.iter_mut().zip(self.mt.row(l)) {
                            *a += yl * mli;
                        }
                    }
                }
                self.my.set_col(j, &v);
                for k in 0..self.r {
                    let g = (0..cols).map(|l| self.y[(l, k)] * col[l]).sum::<T>();
                    self.yty[(k, j)] = g;
                    self.yty[(j, k)] = g;
                }
                self.flops.mat_vec(rows, cols);
                self.flops.mat_vec(self.r, cols);
            }
        }
    }

    /// `col ← max(0, col − η ∇)` for column `j` of `side`.
    pub fn nmf_column_step(&mut self, side: Side, j: usize) -> Result<Vec<T>> {
        if j >= self.r {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.r,
            });
        }
        let g = self.partial_gradient(side, j);
        let (eta, guarded) = self.step_size(side, j);
        if guarded {
            self.safeguarded += 1;
        }
        let cur = self.column(side, j);
        let new: Vec<T> = cur
            .iter()
            .zip(&g)
            .map(|(&c, &gv)| (c - eta * gv).max(T::zero()))
            .collect();
        let len = cur.len();
        self.flops.mat_vec(len, self.r);
        self.flops.elementwise(len);
        self.flops.scalar(2 * len + 1);
        self.flops.prox(len);
        self.write_column(side, j, &new);
        Ok(new)
    }

    /// Scales each nonzero `X` column to unit norm and the matching `Y`
    /// column by the inverse factor; zero columns are counted and skipped.
    pub fn nmf_normalize(&mut self) {
        for j in 0..self.r {
            let col = self.x.col(j);
            let nx = norm(&col);
            if nx == T::zero() {
                self.zero_columns += 1;
                continue;
            }
            let xs: Vec<T> = col.iter().map(|&v| v / nx).collect();
            let ys: Vec<T> = self.y.col(j).iter().map(|&v| v * nx).collect();
            self.x.set_col(j, &xs);
            self.y.set_col(j, &ys);
        }
        self.rebuild_caches();
    }

    pub fn nmf_gs_scores(&self, side: Side, rule: GreedyRule) -> Result<Vec<T>> {
        (0..self.r)
            .map(|j| self.column_score(side, j, rule))
            .collect()
    }

    fn column_score(&self, side: Side, j: usize, rule: GreedyRule) -> Result<T> {
        let g = self.partial_gradient(side, j);
        let cur = self.column(side, j);
        let (eta, _) = self.step_size(side, j);
        let zero = T::zero();
        Ok(match rule {
            GreedyRule::Gs => norm(&g),
            GreedyRule::Gsl => norm(&g) * eta.sqrt(),
            GreedyRule::GsS => cur
                .iter()
                .zip(&g)
                .map(|(&c, &gv)| {
                    let p = if c == zero { gv.min(zero) } else { gv };
                    p * p
                })
                .sum::<T>()
                .sqrt(),
            GreedyRule::GsR | GreedyRule::GsQ => {
                let d: Vec<T> = cur
                    .iter()
                    .zip(&g)
                    .map(|(&c, &gv)| (c - eta * gv).max(zero) - c)
                    .collect();
                if rule == GreedyRule::GsR {
                    norm(&d)
                } else {
                    // Quadratic model with curvature 1/η, the column's Lipschitz constant.
                    dot(&g, &d) + norm_sq(&d) / (T::two() * eta)
                }
            }
            GreedyRule::Mbi => {
                return Err(Error::UnsupportedScheme(
                    "MBI is offered for the quadratic demo and LASSO only".into(),
                ))
            }
        })
    }

    pub fn is_nonnegative(&self) -> bool {
        self.x
            .as_slice()
            .iter()
            .chain(self.y.as_slice())
            .all(|&v| v >= T::zero())
    }

    /// Largest relative deviation of the four caches from recomputation.
    pub fn cache_drift(&self) -> T {
        let rel = |a: &DenseMatrix<T>, b: &DenseMatrix<T>| {
            a.max_abs_diff(b)
                / (T::one() + a.as_slice().iter().fold(T::zero(), |m, v| m.max(v.abs())))
        };
        rel(&self.m.matmul(&self.y), &self.my)
            .max(rel(&self.mt.matmul(&self.x), &self.mtx))
            .max(rel(&gram_of(&self.y), &self.yty))
            .max(rel(&gram_of(&self.x), &self.xtx))
    }

    /// Norm of the projected gradient over both factors.
    pub fn projected_gradient_norm(&self) -> T {
        let mut acc = T::zero();
        for side in [Side::X, Side::Y] {
            for j in 0..self.r {
                let g = self.partial_gradient(side, j);
                let c = self.column(side, j);
                acc += c
                    .iter()
                    .zip(&g)
                    .map(|(&cv, &gv)| {
                        let p = if cv == T::zero() {
                            gv.min(T::zero())
                        } else {
                            gv
                        };
                        p * p
                    })
                    .sum::<T>();
            }
        }
        acc.sqrt()
    }
}

impl<T: Scalar> CompositeProblem<T> for NmfProblem<T> {
    fn num_blocks(&self) -> usize {
        2 * self.r
    }

    fn block(&self, i: usize) -> Vec<T> {
        let (side, j) = self.side_of(i);
        self.column(side, j)
    }

    fn set_block(&mut self, i: usize, value: &[T]) -> Result<()> {
        let (side, j) = self.side_of(i);
        let len = match side {
            Side::X => self.x.rows(),
            Side::Y => self.y.rows(),
        };
        if value.len() != len {
            return Err(shape_err(len, value.len()));
        }
        self.write_column(side, j, value);
        Ok(())
    }

    fn block_gradient(&self, i: usize) -> Result<Vec<T>> {
        let (side, j) = self.side_of(i);
        Ok(self.partial_gradient(side, j))
    }

    fn block_lipschitz(&self, i: usize) -> T {
        let (side, j) = self.side_of(i);
        T::one() / self.step_size(side, j).0
    }

    fn block_regularizer(&self, _: usize) -> Regularizer<T> {
        Regularizer::NonNeg
    }

    fn objective(&self) -> T {
        self.objective_cached()
    }
}

impl<T: Scalar> CoordinateProblem<T> for NmfProblem<T> {
    fn num_blocks(&self) -> usize {
        2 * self.r
    }

    fn objective(&self) -> T {
        self.objective_cached()
    }

    fn update(&mut self, i: usize) -> Result<()> {
        if i >= 2 * self.r {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: 2 * self.r,
            });
        }
        let (side, j) = self.side_of(i);
        self.nmf_column_step(side, j).map(|_| ())
    }

    /// Scores over all `2r` columns, `X` first.
    fn scores(&self, rule: GreedyRule) -> Result<Vec<T>> {
        let mut s = self.nmf_gs_scores(Side::X, rule)?;
        s.extend(self.nmf_gs_scores(Side::Y, rule)?);
        Ok(s)
    }

    fn stationarity(&self) -> T {
        self.projected_gradient_norm()
    }

    fn variables(&self) -> Vec<T> {
        let mut v = self.x.as_slice().to_vec();
        v.extend_from_slice(self.y.as_slice());
        v
    }

    fn flops(&self) -> FlopCounter {
        self.flops
    }

    fn block_lipschitz_all(&self) -> Vec<T> {
        (0..2 * self.r)
            .map(|i| CompositeProblem::block_lipschitz(self, i).max(T::of(SAFEGUARD_EPS)))
            .collect()
    }

    /// Projected gradient step on both factors at once.
    fn full_update(&mut self) -> Result<()> {
        let (rows, cols) = self.m.shape();
        let r = self.r;
        let gx: Vec<Vec<T>> = (0..r).map(|j| self.partial_gradient(Side::X, j)).collect();
        let gy: Vec<Vec<T>> = (0..r).map(|j| self.partial_gradient(Side::Y, j)).collect();
        let lx =
            crate::numeric::spectral_norm_sq(&self.y, 50, T::of(1e-8)).max(T::of(SAFEGUARD_EPS));
        let ly =
            crate::numeric::spectral_norm_sq(&self.x, 50, T::of(1e-8)).max(T::of(SAFEGUARD_EPS));
        for j in 0..r {
            let xc: Vec<T> = self
                .x
                .col(j)
                .iter()
                .zip(&gx[j])
                .map(|(&c, &g)| (c - g / lx).max(T::zero()))
                .collect();
            self.x.set_col(j, &xc);
            let yc: Vec<T> = self
                .y
                .col(j)
                .iter()
                .zip(&gy[j])
                .map(|(&c, &g)| (c - g / ly).max(T::zero()))
                .collect();
            self.y.set_col(j, &yc);
        }
        self.rebuild_caches();
        self.flops.mat_vec(rows * r, r);
        self.flops.mat_vec(cols * r, r);
        self.flops.scalar(3 * (rows + cols) * r);
        self.flops.mat_vec(rows * r, cols);
        self.flops.mat_vec(cols * r, rows);
        Ok(())
    }

    /// Normalization once per epoch.
    fn end_epoch(&mut self) -> Result<()> {
        self.nmf_normalize();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(seed: u64, m: usize, n: usize, r: usize) -> DenseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DenseMatrix::from_fn(m, r, |_, _| 1.0 - rng.random::<f64>());
        let y = DenseMatrix::from_fn(n, r, |_, _| 1.0 - rng.random::<f64>());
        x.matmul(&y.transpose())
    }

    #[test]
    fn scalar_column_step() {
        let m = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        let one = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let mut p = NmfProblem::with_factors(m, one.clone(), one).unwrap();
        let s = p.nmf_gs_scores(Side::X, GreedyRule::GsR).unwrap();
        assert_eq!(s, vec![1.0]);
        assert_eq!(p.nmf_column_step(Side::X, 0).unwrap(), vec![2.0]);
        assert_eq!(p.objective_direct(), 0.0);
    }

    #[test]
    fn exact_factorization_is_a_fixed_point() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0], vec![0.3, 0.3]]).unwrap();
        let y = DenseMatrix::from_rows(&[vec![0.4, 1.0], vec![1.0, 0.1]]).unwrap();
        let m = x.matmul(&y.transpose());
        let mut p = NmfProblem::with_factors(m, x.clone(), y).unwrap();
        assert!(p.objective_direct() < 1e-30);
        let r = p.nmf_gs_scores(Side::X, GreedyRule::GsR).unwrap();
        assert!(r.iter().all(|&v| v < 1e-14));
        p.nmf_column_step(Side::X, 1).unwrap();
        assert!(p.x().max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn projection_clips_at_zero() {
        let m = DenseMatrix::<f64>::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let x = DenseMatrix::<f64>::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let y = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        let mut p = NmfProblem::with_factors(m, x, y).unwrap();
        let col = p.nmf_column_step(Side::X, 0).unwrap();
        assert_eq!(col[0], 0.0);
        assert!((col[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normalize_examples() {
        let m = DenseMatrix::<f64>::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let x = DenseMatrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let y = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let mut p = NmfProblem::with_factors(m, x, y).unwrap();
        let before = p.objective_direct();
        p.nmf_normalize();
        assert!((p.x()[(0, 0)] - 0.6).abs() < 1e-15 && (p.x()[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((p.y()[(0, 0)] - 5.0).abs() < 1e-15);
        assert!((p.objective_direct() - before).abs() <= 1e-12 * (1.0 + before));
        let x1 = p.x().clone();
        p.nmf_normalize();
        assert!(p.x().max_abs_diff(&x1) < 1e-15);
    }

    #[test]
    fn zero_column_is_safeguarded() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let y = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let mut p = NmfProblem::with_factors(m, x, y).unwrap();
        p.nmf_column_step(Side::Y, 1).unwrap();
        assert_eq!(p.safeguarded_steps(), 1);
        p.nmf_normalize();
        assert_eq!(p.zero_columns(), 1);
        assert!(p.is_nonnegative());
    }

    #[test]
    fn cyclic_updates_descend_and_caches_hold() {
        let m = planted(1, 30, 20, 3);
        let mut p = NmfProblem::random_init(m, 3, 7).unwrap();
        let mut prev = p.objective_direct();
        for k in 0..6 * 100 {
            p.update(k % 6).unwrap();
            let f = p.objective_direct();
            assert!(f <= prev * (1.0 + 1e-12) + 1e-12);
            assert!(p.is_nonnegative());
            prev = f;
            if k % 6 == 5 {
                p.end_epoch().unwrap();
            }
        }
        assert!(p.cache_drift() < 1e-9);
        assert!((p.objective_cached() - p.objective_direct()).abs() < 1e-8 * (1.0 + prev));
        assert!(p.relative_error() < 0.05, "{}", p.relative_error());
    }

    #[test]
    fn greedy_scores_cover_all_columns() {
        let m = planted(2, 12, 9, 2);
        let p = NmfProblem::random_init(m, 2, 3).unwrap();
        for rule in [GreedyRule::GsS, GreedyRule::GsR, GreedyRule::GsQ] {
            let s = CoordinateProblem::scores(&p, rule).unwrap();
            assert_eq!(s.len(), 4);
        }
        let q = p.nmf_gs_scores(Side::Y, GreedyRule::GsQ).unwrap();
        assert!(q.iter().all(|&v| v <= 0.0));
    }
}
