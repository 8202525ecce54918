//! Experiment runner: builds an instance, computes a reference solution, and
//! records per-epoch metrics for every trial of an index rule.

use std::path::PathBuf;
use std::time::Instant;

use coordesc::numeric::dist;
use coordesc::problems::lasso::continuation_schedule;
use coordesc::schemes::{apply_scheme, ExtrapolationState};
use coordesc::selection::{greedy_argmax, trial_seed};
use coordesc::{
    CompositeProblem, CoordinateProblem, IndexRule, IndexRuleState, Lasso, Logistic, Nmf,
    Quadratic, SchemeConfig, SchemeKind, SvmDual,
};
use rayon::prelude::*;

use crate::error::{BenchError, Result};
use crate::generators::{gen_lasso, gen_logistic, gen_nmf, gen_svm};
use crate::reference::{reference_solve, Reference};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Lasso {
        m: usize,
        n: usize,
        k: usize,
        sigma: f64,
        lambda: f64,
    },
    Nmf {
        m: usize,
        n: usize,
        rank: usize,
    },
    Logistic {
        m: usize,
        separation: f64,
        c: f64,
    },
    Svm {
        m: usize,
        n: usize,
        separation: f64,
        c: f64,
    },
    /// `7x² + 6xy + 8y²` from `(8, −6)`.
    Quadratic,
}

impl ProblemSpec {
    /// Desk-scale defaults for a problem name.
    pub fn default_for(name: &str) -> Result<Self> {
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "lasso" => ProblemSpec::Lasso {
                m: 50,
                n: 100,
                k: 10,
                sigma: 1e-4,
                lambda: 1e3,
            },
            "nmf" => ProblemSpec::Nmf {
                m: 200,
                n: 100,
                rank: 5,
            },
            "logistic" => ProblemSpec::Logistic {
                m: 100,
                separation: 2.0,
                c: 1.0,
            },
            "svm" => ProblemSpec::Svm {
                m: 500,
                n: 50,
                separation: 1.0,
                c: 1.0,
            },
            "quadratic" => ProblemSpec::Quadratic,
            other => {
                return Err(BenchError::InvalidConfig(format!(
                    "unknown problem '{other}'"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Lasso { .. } => "lasso",
            ProblemSpec::Nmf { .. } => "nmf",
            ProblemSpec::Logistic { .. } => "logistic",
            ProblemSpec::Svm { .. } => "svm",
            ProblemSpec::Quadratic => "quadratic",
        }
    }

    /// Parameters as `key=value` pairs, for record metadata.
    pub fn describe(&self) -> Vec<(String, String)> {
        let kv = |k: &str, v: String| (k.to_string(), v);
        let mut out = vec![kv("problem", self.name().into())];
        match *self {
            ProblemSpec::Lasso {
                m,
                n,
                k,
                sigma,
                lambda,
            } => out.extend([
                kv("m", m.to_string()),
                kv("n", n.to_string()),
                kv("k", k.to_string()),
                kv("sigma", sigma.to_string()),
                kv("lambda", lambda.to_string()),
            ]),
            ProblemSpec::Nmf { m, n, rank } => out.extend([
                kv("m", m.to_string()),
                kv("n", n.to_string()),
                kv("rank", rank.to_string()),
            ]),
            ProblemSpec::Logistic { m, separation, c } => out.extend([
                kv("m", m.to_string()),
                kv("separation", separation.to_string()),
                kv("C", c.to_string()),
            ]),
            ProblemSpec::Svm {
                m,
                n,
                separation,
                c,
            } => out.extend([
                kv("m", m.to_string()),
                kv("n", n.to_string()),
                kv("separation", separation.to_string()),
                kv("C", c.to_string()),
            ]),
            ProblemSpec::Quadratic => {}
        }
        out
    }
}

/// Both problem interfaces, so the runner can drive native updates and the
/// generic schemes alike.
pub trait Solvable: CoordinateProblem<f64> + CompositeProblem<f64> {}

impl<P: CoordinateProblem<f64> + CompositeProblem<f64>> Solvable for P {}

#[derive(Debug, Clone)]
pub enum Instance {
    Lasso(Lasso),
    Nmf(Nmf),
    Logistic(Logistic),
    Svm(SvmDual),
    Quadratic(Quadratic),
}

/// Offset mixed into the instance seed for the NMF starting factors.
const NMF_INIT_STREAM: u64 = 0x6e6d_665f_696e_6974;

impl Instance {
    pub fn build(spec: &ProblemSpec, seed: u64) -> Result<Self> {
        Ok(match *spec {
            ProblemSpec::Lasso {
                m,
                n,
                k,
                sigma,
                lambda,
            } => Instance::Lasso(
                gen_lasso(m, n, k, sigma, lambda, seed)?
                    .problem()?
                    .with_gradient_cache(),
            ),
            ProblemSpec::Nmf { m, n, rank } => {
                Instance::Nmf(gen_nmf(m, n, rank, seed)?.problem(seed ^ NMF_INIT_STREAM)?)
            }
            ProblemSpec::Logistic { m, separation, c } => {
                Instance::Logistic(gen_logistic(m, separation, c, seed)?.0)
            }
            ProblemSpec::Svm {
                m,
                n,
                separation,
                c,
            } => Instance::Svm(gen_svm(m, n, separation, c, seed)?.0),
            ProblemSpec::Quadratic => Instance::Quadratic(Quadratic::demo()),
        })
    }

    pub fn solvable(&self) -> &dyn Solvable {
        match self {
            Instance::Lasso(p) => p,
            Instance::Nmf(p) => p,
            Instance::Logistic(p) => p,
            Instance::Svm(p) => p,
            Instance::Quadratic(p) => p,
        }
    }

    pub fn solvable_mut(&mut self) -> &mut dyn Solvable {
        match self {
            Instance::Lasso(p) => p,
            Instance::Nmf(p) => p,
            Instance::Logistic(p) => p,
            Instance::Svm(p) => p,
            Instance::Quadratic(p) => p,
        }
    }

    /// Reference minimizer for the convex problems.
    pub fn reference(&self, tol: f64) -> Result<Reference> {
        match self {
            Instance::Lasso(p) => reference_solve(p, tol),
            Instance::Logistic(p) => reference_solve(p, tol),
            Instance::Svm(p) => reference_solve(p, tol),
            Instance::Quadratic(p) => reference_solve(p, tol),
            Instance::Nmf(_) => Err(BenchError::UnsupportedReference(
                "NMF (nonconvex; relative factorization error is reported instead)".into(),
            )),
        }
    }

    /// Distance to the reference, or relative factorization error for NMF.
    fn distance(&self, reference: Option<&[f64]>) -> f64 {
        match (self, reference) {
            (Instance::Nmf(p), _) => p.relative_error(),
            (_, Some(r)) => dist(&self.solvable().variables(), r),
            (_, None) => f64::NAN,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub rule: IndexRule,
    /// `None` runs each problem's own coordinate update.
    pub scheme: Option<SchemeConfig<f64>>,
    pub epochs: usize,
    pub seed: u64,
    /// Stationarity level reported as the convergence epoch.
    pub tolerance: f64,
    pub trials: usize,
    pub output_path: Option<PathBuf>,
    /// LASSO only: geometric factor of a warm-started `λ` schedule.
    pub continuation: Option<f64>,
    pub reference_tol: f64,
    /// End a trial after the first epoch whose stationarity is within
    /// `tolerance`; records are then shorter than `epochs + 1` rows.
    pub stop_at_tolerance: bool,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, rule: IndexRule) -> Self {
        Self {
            problem,
            rule,
            scheme: None,
            epochs: 100,
            seed: 0,
            tolerance: 1e-6,
            trials: 20,
            output_path: None,
            continuation: None,
            reference_tol: 1e-10,
            stop_at_tolerance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(BenchError::InvalidConfig(
                "epochs must be at least 1".into(),
            ));
        }
        if self.trials == 0 {
            return Err(BenchError::InvalidConfig(
                "trials must be at least 1".into(),
            ));
        }
        if !(self.tolerance > 0.0) || !(self.reference_tol > 0.0) {
            return Err(BenchError::InvalidConfig(
                "tolerances must be positive".into(),
            ));
        }
        if let Some(s) = &self.scheme {
            s.validate()?;
            if s.scheme == SchemeKind::StochasticProxLinear {
                return Err(BenchError::InvalidConfig(
                    "the stochastic scheme needs a finite-sum problem, not a coordinate benchmark"
                        .into(),
                ));
            }
        }
        if self.continuation.is_some() && !matches!(self.problem, ProblemSpec::Lasso { .. }) {
            return Err(BenchError::InvalidConfig(
                "continuation applies to LASSO only".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub objective: f64,
    pub grad_map_norm: f64,
    pub dist_to_ref: f64,
    pub flops: u64,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceRecord {
    pub rows: Vec<EpochRow>,
    pub metadata: Vec<(String, String)>,
}

impl ConvergenceRecord {
    /// First epoch whose stationarity is at most `tol`.
    pub fn epochs_to_stationarity(&self, tol: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.grad_map_norm <= tol)
            .map(|r| r.epoch)
    }

    /// First epoch whose distance to the reference is at most `tol`.
    pub fn epochs_to_distance(&self, tol: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.dist_to_ref <= tol)
            .map(|r| r.epoch)
    }

    pub fn last(&self) -> Option<&EpochRow> {
        self.rows.last()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub trials: Vec<ConvergenceRecord>,
    pub aggregate: ConvergenceRecord,
    pub reference: Option<Reference>,
}

/// Per-epoch arithmetic mean across trials. A trial that stopped early
/// contributes its final row to every later epoch.
pub fn aggregate(records: &[ConvergenceRecord]) -> Result<ConvergenceRecord> {
    let first = records
        .first()
        .ok_or_else(|| BenchError::InvalidConfig("nothing to aggregate".into()))?;
    if records.iter().any(|r| r.rows.is_empty()) {
        return Err(BenchError::InvalidConfig(
            "cannot aggregate an empty record".into(),
        ));
    }
    let len = records.iter().map(|r| r.rows.len()).max().unwrap_or(0);
    let k = records.len() as f64;
    let at = |r: &ConvergenceRecord, e: usize| r.rows[e.min(r.rows.len() - 1)];
    let rows = (0..len)
        .map(|e| {
            let mean = |f: &dyn Fn(&EpochRow) -> f64| {
                records.iter().map(|r| f(&at(r, e))).sum::<f64>() / k
            };
            EpochRow {
                epoch: e,
                objective: mean(&|r| r.objective),
                grad_map_norm: mean(&|r| r.grad_map_norm),
                dist_to_ref: mean(&|r| r.dist_to_ref),
                flops: mean(&|r| r.flops as f64).round() as u64,
                elapsed_ns: mean(&|r| r.elapsed_ns as f64).round() as u64,
            }
        })
        .collect();
    let mut metadata: Vec<(String, String)> = first
        .metadata
        .iter()
        .filter(|(key, _)| key != "trial" && key != "converged_epoch")
        .cloned()
        .collect();
    metadata.push((
        "aggregate".into(),
        format!("mean of {} trials", records.len()),
    ));
    Ok(ConvergenceRecord { rows, metadata })
}

/// Picks the next block for one update.
enum Picker {
    Sampled(Box<IndexRuleState>),
    Greedy(coordesc::GreedyRule),
}

impl Picker {
    fn new(rule: IndexRule, p: &dyn Solvable, seed: u64) -> Result<Self> {
        if let IndexRule::Greedy(g) = rule {
            return Ok(Picker::Greedy(g));
        }
        let s = CoordinateProblem::num_blocks(p);
        let lips = p.block_lipschitz_all();
        Ok(Picker::Sampled(Box::new(IndexRuleState::from_rule(
            rule,
            s,
            seed,
            Some(&lips),
        )?)))
    }

    fn next(&mut self, p: &dyn Solvable) -> Result<usize> {
        match self {
            Picker::Sampled(state) => Ok(state.next_index(CoordinateProblem::num_blocks(p))?),
            Picker::Greedy(g) => Ok(greedy_argmax(&p.scores(*g)?, g.sense())?),
        }
    }
}

fn step(
    p: &mut dyn Solvable,
    scheme: Option<&SchemeConfig<f64>>,
    extrapolation: &mut ExtrapolationState<f64>,
    i: usize,
) -> Result<()> {
    match scheme {
        None => p.update(i)?,
        Some(cfg) => {
            apply_scheme(p, cfg, extrapolation, i)?;
        }
    }
    Ok(())
}

/// Warm-started `λ` schedule ending at the instance's own `λ`; each earlier
/// stage runs until the stationarity tolerance is met or `stage_cap` epochs.
fn run_continuation(
    lasso: &mut Lasso,
    eta: f64,
    rule: IndexRule,
    seed: u64,
    tolerance: f64,
    stage_cap: usize,
) -> Result<(usize, usize)> {
    let target = lasso.lambda();
    let atb = lasso.a().matvec_t(lasso.b());
    let smax = coordesc::numeric::norm_inf(&atb);
    if smax == 0.0 {
        return Ok((0, 0));
    }
    // Below 1/‖Aᵀb‖∞ the solution is zero.
    let lambda0 = (1.0 / smax).min(target);
    let schedule = continuation_schedule(lambda0, eta, target)?;
    let mut spent = 0;
    let stages = schedule.len() - 1;
    for &lam in &schedule[..stages] {
        lasso.set_lambda(lam)?;
        let mut picker = Picker::new(rule, lasso, seed)?;
        let s = CoordinateProblem::num_blocks(lasso);
        for _ in 0..stage_cap {
            for _ in 0..s {
                let i = picker.next(lasso)?;
                lasso.update(i)?;
            }
            spent += 1;
            if lasso.stationarity() <= tolerance {
                break;
            }
        }
    }
    lasso.set_lambda(target)?;
    Ok((stages, spent))
}

/// Epoch budget per intermediate continuation stage.
const CONTINUATION_STAGE_CAP: usize = 50;

/// One trial on a private copy of `instance`.
pub fn run_trial(
    instance: &Instance,
    reference: Option<&[f64]>,
    config: &ExperimentConfig,
    trial: usize,
) -> Result<ConvergenceRecord> {
    let mut inst = instance.clone();
    let seed = trial_seed(config.seed, trial as u64);
    let mut metadata = config.problem.describe();
    metadata.extend([
        ("rule".to_string(), config.rule.to_string()),
        (
            "scheme".to_string(),
            config
                .scheme
                .map_or("native".to_string(), |s| format!("{:?}", s.scheme)),
        ),
        ("seed".to_string(), config.seed.to_string()),
        ("trial".to_string(), trial.to_string()),
        ("trial_seed".to_string(), seed.to_string()),
    ]);
    if let (Some(eta), Instance::Lasso(l)) = (config.continuation, &mut inst) {
        let (stages, spent) = run_continuation(
            l,
            eta,
            config.rule,
            seed,
            config.tolerance,
            CONTINUATION_STAGE_CAP,
        )?;
        metadata.push((
            "continuation".into(),
            format!("eta={eta} stages={stages} warmup_epochs={spent}"),
        ));
    }
    let mut picker = Picker::new(config.rule, inst.solvable(), seed)?;
    let s = CoordinateProblem::num_blocks(inst.solvable());
    let mut extrapolation = ExtrapolationState::new(s);
    let mut elapsed = 0u64;
    let mut rows = Vec::with_capacity(config.epochs + 1);
    let snapshot = |inst: &Instance, epoch: usize, elapsed: u64| -> Result<EpochRow> {
        let p = inst.solvable();
        let objective = CoordinateProblem::objective(p);
        if !objective.is_finite() {
            return Err(BenchError::NonFinite {
                trial,
                epoch,
                value: objective,
            });
        }
        Ok(EpochRow {
            epoch,
            objective,
            grad_map_norm: p.stationarity(),
            dist_to_ref: inst.distance(reference),
            flops: p.flops().total(),
            elapsed_ns: elapsed,
        })
    };
    rows.push(snapshot(&inst, 0, 0)?);
    for epoch in 1..=config.epochs {
        let start = Instant::now();
        for _ in 0..s {
            let i = picker.next(inst.solvable())?;
            step(
                inst.solvable_mut(),
                config.scheme.as_ref(),
                &mut extrapolation,
                i,
            )?;
        }
        inst.solvable_mut().end_epoch()?;
        elapsed += start.elapsed().as_nanos() as u64;
        let row = snapshot(&inst, epoch, elapsed)?;
        rows.push(row);
        if config.stop_at_tolerance && row.grad_map_norm <= config.tolerance {
            break;
        }
    }
    let record = ConvergenceRecord { rows, metadata };
    let converged = record
        .epochs_to_stationarity(config.tolerance)
        .map_or("none".to_string(), |e| e.to_string());
    let mut record = record;
    record
        .metadata
        .push(("tolerance".into(), config.tolerance.to_string()));
    record.metadata.push(("converged_epoch".into(), converged));
    Ok(record)
}

/// Builds the instance from `config.seed`, solves for a reference when the
/// problem is convex, and runs all trials in parallel. Deterministic rules
/// are run once and the record replicated.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let instance = Instance::build(&config.problem, config.seed)?;
    let reference = match instance.reference(config.reference_tol) {
        Ok(r) => Some(r),
        Err(BenchError::UnsupportedReference(_)) => None,
        Err(e) => return Err(e),
    };
    run_experiment_on(&instance, reference, config)
}

/// As [`run_experiment`] on a prepared instance and reference.
pub fn run_experiment_on(
    instance: &Instance,
    reference: Option<Reference>,
    config: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let ref_x = reference.as_ref().map(|r| r.x.as_slice());
    let mut trials = if config.rule.is_deterministic() {
        let one = run_trial(instance, ref_x, config, 0)?;
        (0..config.trials)
            .map(|t| {
                let mut r = one.clone();
                for (k, v) in &mut r.metadata {
                    if k == "trial" {
                        *v = t.to_string();
                    }
                }
                r
            })
            .collect()
    } else {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(instance, ref_x, config, t))
            .collect::<Result<Vec<_>>>()?
    };
    if let Some(r) = &reference {
        for rec in &mut trials {
            rec.metadata
                .push(("reference_objective".into(), r.objective.to_string()));
            rec.metadata
                .push(("reference_grad_map".into(), r.grad_map_norm.to_string()));
        }
    }
    let aggregate = aggregate(&trials)?;
    Ok(ExperimentOutcome {
        trials,
        aggregate,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use coordesc::GreedyRule;

    fn small_lasso() -> ProblemSpec {
        ProblemSpec::Lasso {
            m: 10,
            n: 20,
            k: 3,
            sigma: 1e-3,
            lambda: 10.0,
        }
    }

    #[test]
    fn zero_epochs_rejected() {
        let mut c = ExperimentConfig::new(small_lasso(), IndexRule::Cyclic);
        c.epochs = 0;
        assert!(matches!(
            run_experiment(&c),
            Err(BenchError::InvalidConfig(_))
        ));
    }

    #[test]
    fn deterministic_trials_agree() {
        let mut c = ExperimentConfig::new(small_lasso(), IndexRule::Greedy(GreedyRule::GsS));
        c.trials = 2;
        c.epochs = 5;
        let out = run_experiment(&c).unwrap();
        assert_eq!(out.trials[0].rows, out.trials[1].rows);
        assert_eq!(out.aggregate.rows.len(), 6);
    }

    #[test]
    fn aggregate_is_mean() {
        let row = |o| EpochRow {
            epoch: 0,
            objective: o,
            grad_map_norm: 0.0,
            dist_to_ref: 0.0,
            flops: 2,
            elapsed_ns: 4,
        };
        let a = ConvergenceRecord {
            rows: vec![row(1.0)],
            metadata: vec![],
        };
        let b = ConvergenceRecord {
            rows: vec![row(3.0)],
            metadata: vec![],
        };
        assert_eq!(aggregate(&[a, b]).unwrap().rows[0].objective, 2.0);
    }

    #[test]
    fn random_trials_differ_and_converge() {
        let mut c = ExperimentConfig::new(small_lasso(), IndexRule::Random);
        c.trials = 3;
        c.epochs = 200;
        let out = run_experiment(&c).unwrap();
        assert_ne!(
            out.trials[0].rows[1].objective,
            out.trials[1].rows[1].objective
        );
        for t in &out.trials {
            let first = t.rows[0].dist_to_ref;
            assert!(t.last().unwrap().dist_to_ref <= first);
        }
    }

    #[test]
    fn continuation_reaches_same_point() {
        let mut c = ExperimentConfig::new(small_lasso(), IndexRule::Cyclic);
        c.trials = 1;
        c.epochs = 300;
        c.continuation = Some(10.0);
        let out = run_experiment(&c).unwrap();
        assert!(out.aggregate.last().unwrap().grad_map_norm <= 1e-6);
        assert!(out.aggregate.meta("continuation").is_some());
    }

    #[test]
    fn nmf_reports_relative_error() {
        let mut c = ExperimentConfig::new(
            ProblemSpec::Nmf {
                m: 12,
                n: 8,
                rank: 2,
            },
            IndexRule::Cyclic,
        );
        c.trials = 1;
        c.epochs = 20;
        let out = run_experiment(&c).unwrap();
        assert!(out.reference.is_none());
        let rows = &out.aggregate.rows;
        assert!(rows.last().unwrap().dist_to_ref < rows[0].dist_to_ref);
    }
}
