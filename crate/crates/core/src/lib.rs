//! Block coordinate descent: update schemes, index rules, proximal operators
//! and ready-made problem instances.
//!
//! Everything is generic over a [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod error;
pub mod numeric;
pub mod problems;
pub mod prox;
pub mod scalar;
pub mod schemes;
pub mod selection;

pub use error::{Error, Result};
pub use numeric::{
    cf_ratio, make_block_partition, BlockPartition, DenseMatrix, DenseVector, FlopCounter,
};
pub use problems::{
    CoordinateProblem, LassoProblem, LeastSquaresProblem, LogisticProblem, NmfProblem,
    QuadraticProblem, QuadraticSum, RotatedL1Problem, SvmDualProblem,
};
pub use prox::{prox_apply, prox_summative, Eligibility, Regularizer, SummativePair};
pub use scalar::Scalar;
pub use schemes::{
    CompositeProblem, FiniteSum, GradientTable, SchemeConfig, SchemeKind, StepPolicy, VrMode,
};
pub use selection::{GreedyRule, IndexRule, IndexRuleState, Sense};

pub type Vector = DenseVector<f64>;
pub type Matrix = DenseMatrix<f64>;
pub type Lasso = LassoProblem<f64>;
pub type LeastSquares = LeastSquaresProblem<f64>;
pub type Logistic = LogisticProblem<f64>;
pub type Nmf = NmfProblem<f64>;
pub type Quadratic = QuadraticProblem<f64>;
pub type SvmDual = SvmDualProblem<f64>;
pub type RotatedL1 = RotatedL1Problem<f64>;
