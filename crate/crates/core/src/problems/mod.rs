//! Application problems with coordinate-friendly caches.

pub mod lasso;
pub mod least_squares;
pub mod logistic;
pub mod nmf;
pub mod quadratic;
pub mod quadratic_sum;
pub mod rotated_l1;
pub mod svm;

use crate::error::Result;
use crate::numeric::FlopCounter;
use crate::prox::shrink;
use crate::scalar::{sign, Scalar};
use crate::selection::GreedyRule;

pub use lasso::{continuation_schedule, LassoProblem};
pub use least_squares::LeastSquaresProblem;
pub use logistic::LogisticProblem;
pub use nmf::{NmfProblem, Side};
pub use quadratic::QuadraticProblem;
pub use quadratic_sum::QuadraticSum;
pub use rotated_l1::{rotated_l1_coord_min, Coord, RotatedL1Problem};
pub use svm::SvmDualProblem;

/// Interface the experiment runner drives: one canonical flop-counted block
/// update plus greedy scores and a stationarity measure.
pub trait CoordinateProblem<T: Scalar>: Send {
    fn num_blocks(&self) -> usize;

    fn objective(&self) -> T;

    /// The problem's coordinate update of block `i`.
    fn update(&mut self, i: usize) -> Result<()>;

    /// Per-block scores for a greedy rule, to be combined with
    /// [`GreedyRule::sense`].
    fn scores(&self, rule: GreedyRule) -> Result<Vec<T>>;

    /// Gradient-map (or projected-gradient) norm; zero at solutions.
    fn stationarity(&self) -> T;

    /// All variables, flattened.
    fn variables(&self) -> Vec<T>;

    /// Flops spent by [`CoordinateProblem::update`] and
    /// [`CoordinateProblem::full_update`] so far.
    fn flops(&self) -> FlopCounter;

    /// Block Lipschitz constants, used by importance sampling.
    fn block_lipschitz_all(&self) -> Vec<T>;

    /// The full (all-block) counterpart of `update`, flop-counted.
    fn full_update(&mut self) -> Result<()>;

    /// Hook run after every epoch.
    fn end_epoch(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Greedy scores for `f(x) + ‖x‖₁` with coordinates as blocks, given the
/// gradient of `f` and a global Lipschitz constant `l`.
pub(crate) fn l1_scores<T: Scalar>(x: &[T], grad: &[T], l: T, rule: GreedyRule) -> Vec<T> {
    let one = T::one();
    x.iter()
        .zip(grad)
        .map(|(&xj, &g)| match rule {
            GreedyRule::GsS => {
                if xj != T::zero() {
                    (g + sign(xj)).abs()
                } else {
                    shrink(g, one).abs()
                }
            }
            GreedyRule::GsR => (xj - shrink(xj - g / l, one / l)).abs(),
            GreedyRule::GsQ => {
                let d = shrink(xj - g / l, one / l) - xj;
                g * d + l * T::half() * d * d + (xj + d).abs() - xj.abs()
            }
            GreedyRule::Gs | GreedyRule::Gsl | GreedyRule::Mbi => g.abs(),
        })
        .collect()
}

/// `x − prox_{r/L}(x − ∇f(x)/L)` for `r = weight · ‖·‖₁` (`weight = 0` gives
/// `∇f/L`).
pub fn gradient_map<T: Scalar>(x: &[T], grad: &[T], l: T, weight: T) -> Vec<T> {
    x.iter()
        .zip(grad)
        .map(|(&xj, &g)| xj - shrink(xj - g / l, weight / l))
        .collect()
}
