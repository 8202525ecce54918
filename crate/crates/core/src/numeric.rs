//! Dense vectors and matrices, block partitions, spectral norm estimation
//! and operation counting.

use std::ops::{Deref, DerefMut, Index, IndexMut, Range};

use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;

/// Owned dense vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector<T>(Vec<T>);

impl<T: Scalar> DenseVector<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> T) -> Self {
        Self((0..n).map(f).collect())
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl<T> From<Vec<T>> for DenseVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

impl<T: Copy> From<&[T]> for DenseVector<T> {
    fn from(v: &[T]) -> Self {
        Self(v.to_vec())
    }
}

impl<T> Deref for DenseVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for DenseVector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> FromIterator<T> for DenseVector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// `y += a * x`
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(format!("{} entries", rows * cols), data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(shape_err(format!("row of length {cols}"), r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn set_col(&mut self, j: usize, values: &[T]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `A x`
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn matvec_t(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            axpy(yi, self.row(i), &mut out);
        }
        out
    }

    /// `A B`
    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                axpy(a, other.row(k), out.row_mut(i));
            }
        }
        out
    }

    /// `Aᵀ A`
    pub fn gram(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for (a, &ra) in r.iter().enumerate() {
                if ra == T::zero() {
                    continue;
                }
                axpy(ra, r, out.row_mut(a));
            }
        }
        out
    }

    pub fn frobenius_sq(&self) -> T {
        norm_sq(&self.data)
    }

    pub fn col_norms_sq(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (o, &v) in out.iter_mut().zip(self.row(i)) {
                *o += v * v;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Contiguous split of `0..n` into `s` nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    total: usize,
    // boundaries[i]..boundaries[i + 1] is block i
    boundaries: Vec<usize>,
}

impl BlockPartition {
    /// Splits `n` variables into `s` blocks whose sizes differ by at most one,
    /// earlier blocks taking the remainder.
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if s == 0 || s > n {
            return Err(Error::InvalidPartition { n, s });
        }
        let base = n / s;
        let extra = n % s;
        let mut boundaries = Vec::with_capacity(s + 1);
        let mut at = 0;
        boundaries.push(0);
        for b in 0..s {
            at += base + usize::from(b < extra);
            boundaries.push(at);
        }
        Ok(Self {
            total: n,
            boundaries,
        })
    }

    /// One block per coordinate.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn num_blocks(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn block(&self, i: usize) -> Range<usize> {
        self.boundaries[i]..self.boundaries[i + 1]
    }

    pub fn block_len(&self, i: usize) -> usize {
        self.boundaries[i + 1] - self.boundaries[i]
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.boundaries.windows(2).map(|w| w[0]..w[1])
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }
}

pub fn make_block_partition(n: usize, s: usize) -> Result<BlockPartition> {
    BlockPartition::new(n, s)
}

/// Operation tallies, counted at the level of arithmetic on scalars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlopCounter {
    pub mat_vec: u64,
    pub vec_vec: u64,
    pub scalar: u64,
    pub transcendental: u64,
    pub prox: u64,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.mat_vec + self.vec_vec + self.scalar + self.transcendental + self.prox
    }

    /// A `rows × cols` matrix times a vector: `rows · (2 cols − 1)`.
    pub fn mat_vec(&mut self, rows: usize, cols: usize) {
        self.mat_vec += (rows * (2 * cols).saturating_sub(1)) as u64;
    }

    /// Inner product of length `n`: `2n − 1`.
    pub fn dot(&mut self, n: usize) {
        self.vec_vec += (2 * n).saturating_sub(1) as u64;
    }

    /// `y += a x` of length `n`.
    pub fn axpy(&mut self, n: usize) {
        self.vec_vec += 2 * n as u64;
    }

    /// Elementwise vector operation touching `n` entries once.
    pub fn elementwise(&mut self, n: usize) {
        self.vec_vec += n as u64;
    }

    pub fn scalar(&mut self, n: usize) {
        self.scalar += n as u64;
    }

    pub fn transcendental(&mut self, n: usize) {
        self.transcendental += n as u64;
    }

    pub fn prox(&mut self, n: usize) {
        self.prox += n as u64;
    }

    pub fn merge(&mut self, other: &FlopCounter) {
        self.mat_vec += other.mat_vec;
        self.vec_vec += other.vec_vec;
        self.scalar += other.scalar;
        self.transcendental += other.transcendental;
        self.prox += other.prox;
    }

    /// Tallies accumulated since `earlier`.
    pub fn since(&self, earlier: &FlopCounter) -> FlopCounter {
        FlopCounter {
            mat_vec: self.mat_vec - earlier.mat_vec,
            vec_vec: self.vec_vec - earlier.vec_vec,
            scalar: self.scalar - earlier.scalar,
            transcendental: self.transcendental - earlier.transcendental,
            prox: self.prox - earlier.prox,
        }
    }
}

/// Ratio of coordinate-update work to full-update work.
pub fn cf_ratio(coord: &FlopCounter, full: &FlopCounter) -> Result<f64> {
    let f = full.total();
    if f == 0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(coord.total() as f64 / f as f64)
}

pub const DEFAULT_POWER_ITERS: usize = 200;
pub const DEFAULT_POWER_TOL: f64 = 1e-10;

/// Estimates `‖A‖₂²` by power iteration on `AᵀA`.
///
/// Starts from the all-ones vector. If that start is (numerically) orthogonal
/// to the dominant eigenvector the estimate falls below the largest squared
/// column norm, so the iteration is repeated from that column's unit vector and
/// the larger Rayleigh quotient is kept. The result is a Rayleigh quotient and
/// therefore never exceeds `‖A‖_F²`.
pub fn spectral_norm_sq<T: Scalar>(a: &DenseMatrix<T>, iters: usize, tol: T) -> T {
    if a.rows() == 0 || a.cols() == 0 || a.frobenius_sq() == T::zero() {
        return T::zero();
    }
    let iters = iters.max(1);
    let ones = vec![T::one(); a.cols()];
    let mut est = power_iterate(a, ones, iters, tol);
    let col_sq = a.col_norms_sq();
    let (jmax, &cmax) =
        col_sq.iter().enumerate().fold(
            (0, &T::zero()),
            |best, (j, v)| if *v > *best.1 { (j, v) } else { best },
        );
    if est < cmax * (T::one() - tol) {
        let mut e = vec![T::zero(); a.cols()];
        e[jmax] = T::one();
        est = est.max(power_iterate(a, e, iters, tol));
    }
    est
}

fn power_iterate<T: Scalar>(a: &DenseMatrix<T>, mut v: Vec<T>, iters: usize, tol: T) -> T {
    let mut est = T::zero();
    for _ in 0..iters {
        let nv = norm(&v);
        if nv == T::zero() {
            return est;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let av = a.matvec(&v);
        // Rayleigh quotient of AᵀA at the unit vector v.
        let next = norm_sq(&av);
        let w = a.matvec_t(&av);
        let converged = (next - est).abs() <= tol * next;
        est = est.max(next);
        v = w;
        if converged {
            break;
        }
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn partition_examples() {
        let p = BlockPartition::new(6, 3).unwrap();
        assert_eq!(p.blocks().collect::<Vec<_>>(), vec![0..2, 2..4, 4..6]);
        let p = BlockPartition::new(5, 2).unwrap();
        assert_eq!(p.blocks().collect::<Vec<_>>(), vec![0..3, 3..5]);
        assert_eq!(
            BlockPartition::new(3, 4),
            Err(Error::InvalidPartition { n: 3, s: 4 })
        );
        assert!(BlockPartition::new(3, 0).is_err());
    }

    #[test]
    fn partition_concatenation_is_exhaustive() {
        for n in 1..=64 {
            for s in 1..=n {
                let p = BlockPartition::new(n, s).unwrap();
                assert_eq!(p.num_blocks(), s);
                let cat: Vec<usize> = p.blocks().flatten().collect();
                assert_eq!(cat, (0..n).collect::<Vec<_>>());
                let sizes: Vec<usize> = (0..s).map(|b| p.block_len(b)).collect();
                let (mn, mx) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
                assert!(mn >= 1 && mx - mn <= 1);
                assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn spectral_norm_examples() {
        let i2 = DenseMatrix::<f64>::identity(2);
        assert_relative_eq!(spectral_norm_sq(&i2, 200, 1e-10), 1.0, epsilon = 1e-12);
        let d = DenseMatrix::from_diag(&[3.0, 1.0]);
        assert_relative_eq!(spectral_norm_sq(&d, 200, 1e-10), 9.0, max_relative = 1e-9);
        // AᵀA = [[10,14],[14,20]]: largest root of t² − 30t + 4 = 0.
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let expected = 15.0 + (221.0f64).sqrt();
        assert_relative_eq!(
            spectral_norm_sq(&a, 200, 1e-12),
            expected,
            max_relative = 1e-9
        );
        assert_relative_eq!(expected, 29.866, epsilon = 1e-3);
        assert_eq!(
            spectral_norm_sq(&DenseMatrix::<f64>::zeros(3, 2), 10, 1e-10),
            0.0
        );
    }

    #[test]
    fn spectral_norm_recovers_from_orthogonal_start() {
        // The all-ones vector lies in the null space of AᵀA.
        let a = DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        assert_relative_eq!(spectral_norm_sq(&a, 200, 1e-12), 2.0, max_relative = 1e-10);
    }

    #[test]
    fn cf_ratio_examples() {
        let c = FlopCounter {
            scalar: 10,
            ..Default::default()
        };
        let f = FlopCounter {
            mat_vec: 1000,
            ..Default::default()
        };
        assert_eq!(cf_ratio(&c, &f).unwrap(), 0.01);
        assert_eq!(
            cf_ratio(
                &FlopCounter::default(),
                &FlopCounter {
                    scalar: 5,
                    ..Default::default()
                }
            )
            .unwrap(),
            0.0
        );
        assert_eq!(
            cf_ratio(
                &FlopCounter {
                    scalar: 5,
                    ..Default::default()
                },
                &FlopCounter::default()
            ),
            Err(Error::UndefinedRatio)
        );
    }

    #[test]
    fn flop_conventions() {
        let mut c = FlopCounter::new();
        c.mat_vec(3, 4);
        assert_eq!(c.mat_vec, 21);
        c.dot(5);
        c.axpy(5);
        assert_eq!(c.vec_vec, 19);
        let before = c;
        c.scalar(3);
        assert_eq!(c.since(&before).total(), 3);
    }

    #[test]
    fn gram_and_products() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let g = a.gram();
        let g2 = a.transpose().matmul(&a);
        assert!(g.max_abs_diff(&g2) < 1e-12);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![3.0, 7.0, 11.0]);
        assert_eq!(a.matvec_t(&[1.0, 0.0, 1.0]), vec![6.0, 8.0]);
        assert_eq!(a.col_norms_sq(), vec![35.0, 56.0]);
    }
}
