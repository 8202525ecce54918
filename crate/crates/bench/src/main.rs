use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use coordesc::{IndexRule, Matrix, SchemeConfig, SchemeKind};
use coordesc_bench::experiment::{ExperimentConfig, ProblemSpec};
use coordesc_bench::io::{export_records, read_config, write_matrix};
use coordesc_bench::proxcheck::{prox_check, ProxCheckOptions};
use coordesc_bench::{gen_classes, gen_lasso, gen_nmf, run_experiment, BenchError, Result};

#[derive(Parser)]
#[command(
    name = "cdbench",
    version,
    about = "Coordinate descent benchmarks on synthetic instances"
)]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance as CSV.
    Gen(RunArgs),
    /// Run one rule and export the trial-mean record.
    Solve(RunArgs),
    /// Compare several rules on one instance; one CSV per rule.
    Bench(BenchArgs),
    /// Check composed proxes against the grid oracle.
    ProxCheck(ProxArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[arg(long)]
    problem: Option<String>,
    /// cyclic, shuffled, random, importance[:alpha], gs, gsl, mbi, gs-s, gs-r, gs-q
    #[arg(long)]
    rule: Option<String>,
    /// native, exact, proximal, prox-linear, extrapolated
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    rank: Option<usize>,
    /// Geometric factor of a warm-started λ schedule (LASSO).
    #[arg(long)]
    continuation: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Support size of the planted LASSO signal.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
    /// Extrapolation weight for the extrapolated scheme.
    #[arg(long)]
    omega: Option<f64>,
}

#[derive(Args, Clone)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated rules; defaults depend on the problem.
    #[arg(long)]
    rules: Option<String>,
}

#[derive(Args, Clone)]
struct ProxArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random inputs per pair and phase.
    #[arg(long, default_value_t = 500)]
    cases: usize,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| BenchError::InvalidConfig(format!("cannot parse {key} = '{v}'")))
}

impl RunArgs {
    /// Fills unset flags from the config file.
    fn merge(mut self, file: &BTreeMap<String, String>) -> Result<Self> {
        for (k, v) in file {
            match k.as_str() {
                "problem" => self.problem = self.problem.or(Some(v.clone())),
                "rule" => self.rule = self.rule.or(Some(v.clone())),
                "scheme" => self.scheme = self.scheme.or(Some(v.clone())),
                "epochs" => self.epochs = self.epochs.or(Some(parse(k, v)?)),
                "seed" => self.seed = self.seed.or(Some(parse(k, v)?)),
                "trials" => self.trials = self.trials.or(Some(parse(k, v)?)),
                "tol" => self.tol = self.tol.or(Some(parse(k, v)?)),
                "out" => self.out = self.out.or(Some(PathBuf::from(v))),
                "lambda" => self.lambda = self.lambda.or(Some(parse(k, v)?)),
                "C" | "c" => self.c = self.c.or(Some(parse(k, v)?)),
                "rank" => self.rank = self.rank.or(Some(parse(k, v)?)),
                "continuation" => self.continuation = self.continuation.or(Some(parse(k, v)?)),
                "m" => self.m = self.m.or(Some(parse(k, v)?)),
                "n" => self.n = self.n.or(Some(parse(k, v)?)),
                "k" => self.k = self.k.or(Some(parse(k, v)?)),
                "sigma" => self.sigma = self.sigma.or(Some(parse(k, v)?)),
                "separation" => self.separation = self.separation.or(Some(parse(k, v)?)),
                "omega" => self.omega = self.omega.or(Some(parse(k, v)?)),
                "rules" => {}
                other => {
                    return Err(BenchError::InvalidConfig(format!(
                        "unknown config key '{other}'"
                    )))
                }
            }
        }
        Ok(self)
    }

    fn spec(&self) -> Result<ProblemSpec> {
        let name = self
            .problem
            .as_deref()
            .ok_or_else(|| BenchError::InvalidConfig("--problem is required".into()))?;
        let mut spec = ProblemSpec::default_for(name)?;
        match &mut spec {
            ProblemSpec::Lasso {
                m,
                n,
                k,
                sigma,
                lambda,
            } => {
                *m = self.m.unwrap_or(*m);
                *n = self.n.unwrap_or(*n);
                *k = self.k.unwrap_or(*k);
                *sigma = self.sigma.unwrap_or(*sigma);
                *lambda = self.lambda.unwrap_or(*lambda);
            }
            ProblemSpec::Nmf { m, n, rank } => {
                *m = self.m.unwrap_or(*m);
                *n = self.n.unwrap_or(*n);
                *rank = self.rank.unwrap_or(*rank);
            }
            ProblemSpec::Logistic { m, separation, c } => {
                *m = self.m.unwrap_or(*m);
                *separation = self.separation.unwrap_or(*separation);
                *c = self.c.unwrap_or(*c);
            }
            ProblemSpec::Svm {
                m,
                n,
                separation,
                c,
            } => {
                *m = self.m.unwrap_or(*m);
                *n = self.n.unwrap_or(*n);
                *separation = self.separation.unwrap_or(*separation);
                *c = self.c.unwrap_or(*c);
            }
            ProblemSpec::Quadratic => {}
        }
        Ok(spec)
    }

    fn scheme(&self) -> Result<Option<SchemeConfig<f64>>> {
        match self.scheme.as_deref().map(str::trim) {
            None | Some("native") => Ok(None),
            Some(s) => {
                let kind = SchemeKind::from_str(s)?;
                let mut cfg = SchemeConfig {
                    scheme: kind,
                    ..Default::default()
                };
                if let Some(w) = self.omega {
                    cfg.omega = w;
                } else if kind == SchemeKind::ProxLinearExtrapolated {
                    cfg.omega = 0.5;
                }
                Ok(Some(cfg))
            }
        }
    }

    fn experiment(&self, rule: IndexRule) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.spec()?, rule);
        cfg.scheme = self.scheme()?;
        cfg.epochs = self.epochs.unwrap_or(cfg.epochs);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.trials = self.trials.unwrap_or(cfg.trials);
        cfg.tolerance = self.tol.unwrap_or(cfg.tolerance);
        cfg.output_path = self.out.clone();
        cfg.continuation = self.continuation;
        Ok(cfg)
    }
}

fn default_rules(spec: &ProblemSpec) -> &'static str {
    match spec {
        ProblemSpec::Lasso { .. } => "cyclic,shuffled,random,gs-s,gs-r,gs-q",
        ProblemSpec::Nmf { .. } => "cyclic,shuffled,random,gs-s,gs-r,gs-q",
        ProblemSpec::Logistic { .. } => "cyclic,shuffled,random,gs-s,gs-r,gs-q",
        ProblemSpec::Svm { .. } => "cyclic,shuffled,random,gs-s,gs-r,gs-q",
        ProblemSpec::Quadratic => "cyclic,random,gs,mbi",
    }
}

fn summary(rule: &str, rec: &coordesc_bench::ConvergenceRecord, tol: f64) -> String {
    let last = rec.last().expect("at least epoch 0");
    let conv = rec
        .epochs_to_stationarity(tol)
        .map_or("-".to_string(), |e| e.to_string());
    format!(
        "{rule:<14} objective {:<14.8e} stationarity {:<10.3e} dist {:<10.3e} converged@{conv}",
        last.objective, last.grad_map_norm, last.dist_to_ref
    )
}

fn gen(args: &RunArgs) -> Result<()> {
    let spec = args.spec()?;
    let seed = args.seed.unwrap_or(0);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}_{seed}.csv", spec.name())));
    let with_column = |a: &Matrix, v: &[f64]| {
        Matrix::from_fn(a.rows(), a.cols() + 1, |i, j| {
            if j < a.cols() {
                a[(i, j)]
            } else {
                v[i]
            }
        })
    };
    let matrix = match spec {
        ProblemSpec::Lasso {
            m,
            n,
            k,
            sigma,
            lambda,
        } => {
            let inst = gen_lasso(m, n, k, sigma, lambda, seed)?;
            with_column(&inst.a, &inst.b)
        }
        ProblemSpec::Nmf { m, n, rank } => gen_nmf(m, n, rank, seed)?.m,
        ProblemSpec::Logistic { m, separation, .. } => {
            let d = gen_classes(m, 2, separation, seed)?;
            with_column(&d.samples, &d.labels)
        }
        ProblemSpec::Svm {
            m, n, separation, ..
        } => {
            let d = gen_classes(m, n, separation, seed)?;
            with_column(&d.samples, &d.labels)
        }
        ProblemSpec::Quadratic => Matrix::from_rows(&[vec![14.0, 6.0], vec![6.0, 16.0]])?,
    };
    write_matrix(&matrix, &out)?;
    println!(
        "wrote {} ({}x{}) to {}",
        spec.name(),
        matrix.rows(),
        matrix.cols(),
        out.display()
    );
    Ok(())
}

fn solve(args: &RunArgs) -> Result<()> {
    let rule_text = args.rule.as_deref().unwrap_or("cyclic");
    let cfg = args.experiment(IndexRule::from_str(rule_text)?)?;
    let outcome = run_experiment(&cfg)?;
    if let Some(r) = &outcome.reference {
        println!(
            "reference objective {:.12e} (gradient map {:.1e})",
            r.objective, r.grad_map_norm
        );
    }
    println!("{}", summary(rule_text, &outcome.aggregate, cfg.tolerance));
    if let Some(path) = &cfg.output_path {
        export_records(&outcome.aggregate, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let spec = args.run.spec()?;
    let rules = args
        .rules
        .clone()
        .unwrap_or_else(|| default_rules(&spec).to_string());
    let dir = args.run.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|source| BenchError::File {
        path: dir.clone(),
        source,
    })?;
    for rule_text in rules.split(',').map(str::trim).filter(|r| !r.is_empty()) {
        let mut cfg = args.run.experiment(IndexRule::from_str(rule_text)?)?;
        let path = dir.join(format!(
            "{}_{}.csv",
            spec.name(),
            rule_text.replace(':', "-")
        ));
        cfg.output_path = Some(path.clone());
        let outcome = run_experiment(&cfg)?;
        export_records(&outcome.aggregate, &path)?;
        println!("{}", summary(rule_text, &outcome.aggregate, cfg.tolerance));
    }
    println!("records in {}", dir.display());
    Ok(())
}

fn proxes(args: &ProxArgs) -> Result<bool> {
    let opts = ProxCheckOptions {
        seed: args.seed,
        grid_cases: args.cases,
        inclusion_cases: args.cases,
        ..Default::default()
    };
    let mut ok = true;
    for r in prox_check(&opts)? {
        let pass = r.max_oracle_gap <= 1e-5 && r.max_residual <= 1e-8;
        ok &= pass;
        println!(
            "{:<14} oracle gap {:.2e}  inclusion residual {:.2e}  ({} cases) {}",
            r.kind.name(),
            r.max_oracle_gap,
            r.max_residual,
            r.cases,
            if pass { "ok" } else { "FAIL" }
        );
    }
    Ok(ok)
}

fn file_config(path: Option<&Path>) -> Result<BTreeMap<String, String>> {
    path.map_or(Ok(BTreeMap::new()), read_config)
}

fn run(cli: Cli) -> Result<bool> {
    let file = file_config(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(a) => gen(&a.merge(&file)?).map(|_| true),
        Command::Solve(a) => solve(&a.merge(&file)?).map(|_| true),
        Command::Bench(mut b) => {
            if b.rules.is_none() {
                b.rules = file.get("rules").cloned();
            }
            b.run = b.run.merge(&file)?;
            bench(&b).map(|_| true)
        }
        Command::ProxCheck(p) => proxes(&p),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
