//! Synthetic instances, reference solutions, a grid prox oracle and the
//! convergence benchmark runner behind `cdbench`.

pub mod error;
pub mod experiment;
pub mod generators;
pub mod io;
pub mod oracle;
pub mod proxcheck;
pub mod reference;

pub use error::{BenchError, Result};
pub use experiment::{
    aggregate, run_experiment, run_experiment_on, run_trial, ConvergenceRecord, EpochRow,
    ExperimentConfig, ExperimentOutcome, Instance, ProblemSpec,
};
pub use generators::{gen_classes, gen_lasso, gen_logistic, gen_nmf, gen_svm};
pub use io::{export_records, read_records};
pub use oracle::{brute_prox_oracle, Grid};
pub use reference::{reference_solve, reference_solve_with, Reference, ReferenceOptions};
