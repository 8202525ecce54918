//! Index rules: cyclic and shuffled sweeps, i.i.d. sampling from a fixed
//! distribution, and greedy selection over problem-supplied scores.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Greedy (Gauss-Southwell type) selection rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GreedyRule {
    /// Largest block gradient.
    Gs,
    /// Largest block gradient scaled by `1/√L_j`.
    Gsl,
    /// Smallest objective after exact block minimization.
    Mbi,
    /// Largest minimal-norm subgradient.
    GsS,
    /// Largest prox-gradient displacement.
    GsR,
    /// Smallest model value of the prox-linear step.
    GsQ,
}

/// Whether the selected index maximizes or minimizes the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

impl GreedyRule {
    pub const ALL: [GreedyRule; 6] = [
        GreedyRule::Gs,
        GreedyRule::Gsl,
        GreedyRule::Mbi,
        GreedyRule::GsS,
        GreedyRule::GsR,
        GreedyRule::GsQ,
    ];

    pub fn sense(self) -> Sense {
        match self {
            GreedyRule::Mbi | GreedyRule::GsQ => Sense::Min,
            _ => Sense::Max,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GreedyRule::Gs => "gs",
            GreedyRule::Gsl => "gsl",
            GreedyRule::Mbi => "mbi",
            GreedyRule::GsS => "gs-s",
            GreedyRule::GsR => "gs-r",
            GreedyRule::GsQ => "gs-q",
        }
    }
}

/// User-facing description of an index rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexRule {
    Cyclic,
    Shuffled,
    /// Uniform i.i.d. sampling.
    Random,
    /// `p_j ∝ L_j^alpha`.
    Importance {
        alpha: f64,
    },
    Greedy(GreedyRule),
}

impl IndexRule {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, IndexRule::Cyclic | IndexRule::Greedy(_))
    }
}

impl fmt::Display for IndexRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexRule::Cyclic => f.write_str("cyclic"),
            IndexRule::Shuffled => f.write_str("shuffled"),
            IndexRule::Random => f.write_str("random"),
            IndexRule::Importance { alpha } => write!(f, "importance:{alpha}"),
            IndexRule::Greedy(g) => f.write_str(g.name()),
        }
    }
}

impl FromStr for IndexRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase().replace('_', "-");
        if let Some(rest) = lower.strip_prefix("importance") {
            let alpha = match rest.strip_prefix(':') {
                Some(a) => a.parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("bad importance exponent '{a}'"))
                })?,
                None if rest.is_empty() => 1.0,
                None => return Err(Error::InvalidParameter(format!("unknown rule '{s}'"))),
            };
            return Ok(IndexRule::Importance { alpha });
        }
        Ok(match lower.as_str() {
            "cyclic" => IndexRule::Cyclic,
            "shuffled" | "shuffled-cyclic" => IndexRule::Shuffled,
            "random" | "uniform" => IndexRule::Random,
            "gs" => IndexRule::Greedy(GreedyRule::Gs),
            "gsl" => IndexRule::Greedy(GreedyRule::Gsl),
            "mbi" => IndexRule::Greedy(GreedyRule::Mbi),
            "gs-s" | "gss" => IndexRule::Greedy(GreedyRule::GsS),
            "gs-r" | "gsr" => IndexRule::Greedy(GreedyRule::GsR),
            "gs-q" | "gsq" => IndexRule::Greedy(GreedyRule::GsQ),
            _ => return Err(Error::InvalidParameter(format!("unknown rule '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Cyclic,
    ShuffledCyclic,
    Random,
    Greedy(GreedyRule),
}

/// Mutable state of an index rule inside one solve loop.
#[derive(Debug, Clone)]
pub struct IndexRuleState {
    kind: RuleKind,
    cursor: usize,
    permutation: Vec<usize>,
    distribution: Vec<f64>,
    cdf: Vec<f64>,
    rng: ChaCha8Rng,
    seed: u64,
    draws: u64,
}

/// Per-trial seed derived from a base seed.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    base ^ trial
}

impl IndexRuleState {
    fn with_kind(kind: RuleKind, seed: u64) -> Self {
        Self {
            kind,
            cursor: 0,
            permutation: Vec::new(),
            distribution: Vec::new(),
            cdf: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            draws: 0,
        }
    }

    pub fn cyclic() -> Self {
        Self::with_kind(RuleKind::Cyclic, 0)
    }

    pub fn shuffled(seed: u64) -> Self {
        Self::with_kind(RuleKind::ShuffledCyclic, seed)
    }

    pub fn random(distribution: Vec<f64>, seed: u64) -> Result<Self> {
        validate_distribution(&distribution)?;
        let mut st = Self::with_kind(RuleKind::Random, seed);
        let mut acc = 0.0;
        st.cdf = distribution
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        st.distribution = distribution;
        Ok(st)
    }

    pub fn uniform(s: usize, seed: u64) -> Result<Self> {
        if s == 0 {
            return Err(Error::EmptyDomain);
        }
        Self::random(vec![1.0 / s as f64; s], seed)
    }

    pub fn greedy(rule: GreedyRule) -> Self {
        Self::with_kind(RuleKind::Greedy(rule), 0)
    }

    /// Builds the state for `rule` over `s` blocks. `lipschitz` is required by
    /// importance sampling only.
    pub fn from_rule(
        rule: IndexRule,
        s: usize,
        seed: u64,
        lipschitz: Option<&[f64]>,
    ) -> Result<Self> {
        if s == 0 {
            return Err(Error::EmptyDomain);
        }
        match rule {
            IndexRule::Cyclic => Ok(Self::cyclic()),
            IndexRule::Shuffled => Ok(Self::shuffled(seed)),
            IndexRule::Random => Self::uniform(s, seed),
            IndexRule::Importance { alpha } => {
                let l = lipschitz.ok_or_else(|| {
                    Error::InvalidParameter(
                        "importance sampling needs block Lipschitz constants".into(),
                    )
                })?;
                if l.len() != s {
                    return Err(crate::error::shape_err(s, l.len()));
                }
                Self::random(importance_distribution(l, alpha)?, seed)
            }
            IndexRule::Greedy(g) => Ok(Self::greedy(g)),
        }
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Next index from a non-greedy rule.
    pub fn next_index(&mut self, s: usize) -> Result<usize> {
        match self.kind {
            RuleKind::Cyclic => self.next_cyclic(s),
            RuleKind::ShuffledCyclic => self.next_shuffled(s),
            RuleKind::Random => self.sample_index(),
            RuleKind::Greedy(g) => Err(Error::UnsupportedScheme(format!(
                "greedy rule {} needs scores",
                g.name()
            ))),
        }
    }

    pub fn next_cyclic(&mut self, s: usize) -> Result<usize> {
        if s == 0 {
            return Err(Error::EmptyDomain);
        }
        let i = self.cursor % s;
        self.cursor = (i + 1) % s;
        Ok(i)
    }

    pub fn next_shuffled(&mut self, s: usize) -> Result<usize> {
        if s == 0 {
            return Err(Error::EmptyDomain);
        }
        if self.permutation.len() != s || self.cursor >= s {
            self.cursor = 0;
        }
        if self.cursor == 0 {
            self.permutation = (0..s).collect();
            self.permutation.shuffle(&mut self.rng);
            self.draws += 1;
        }
        let i = self.permutation[self.cursor];
        self.cursor = (self.cursor + 1) % s;
        Ok(i)
    }

    pub fn sample_index(&mut self) -> Result<usize> {
        if self.cdf.is_empty() {
            return Err(Error::InvalidDistribution(
                "no distribution configured".into(),
            ));
        }
        let u: f64 = self.rng.random();
        self.draws += 1;
        let j = self.cdf.partition_point(|&c| c <= u);
        if j < self.cdf.len() {
            return Ok(j);
        }
        // Rounding left the CDF just below 1: fall back to the last index with mass.
        Ok(self
            .distribution
            .iter()
            .rposition(|&p| p > 0.0)
            .expect("validated distribution has positive mass"))
    }
}

pub fn next_cyclic(state: &mut IndexRuleState, s: usize) -> Result<usize> {
    state.next_cyclic(s)
}

pub fn next_shuffled(state: &mut IndexRuleState, s: usize) -> Result<usize> {
    state.next_shuffled(s)
}

pub fn sample_index(state: &mut IndexRuleState) -> Result<usize> {
    state.sample_index()
}

fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if let Some(j) = p.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("entry {j} is {}", p[j])));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!(
            "entries sum to {total}"
        )));
    }
    Ok(())
}

/// `p_j = L_j^alpha / Σ_i L_i^alpha`.
pub fn importance_distribution<T: Scalar>(lipschitz: &[T], alpha: f64) -> Result<Vec<f64>> {
    if lipschitz.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling exponent {alpha}"
        )));
    }
    let l: Vec<f64> = lipschitz.iter().map(|v| v.to_f64_lossy()).collect();
    if let Some(j) = l.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidLipschitz {
            index: j,
            value: l[j],
        });
    }
    // Normalize by the largest constant first so large exponents cannot overflow.
    let lmax = l.iter().cloned().fold(0.0, f64::max);
    let w: Vec<f64> = l.iter().map(|v| (v / lmax).powf(alpha)).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Index of the largest (or smallest) score, lowest index on ties. NaN
/// scores never win.
pub fn greedy_argmax<T: Scalar>(scores: &[T], sense: Sense) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let mut best: Option<(usize, T)> = None;
    for (j, &v) in scores.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, b)) => match sense {
                Sense::Max => v > b,
                Sense::Min => v < b,
            },
        };
        if better {
            best = Some((j, v));
        }
    }
    Ok(best.map_or(0, |(j, _)| j))
}

/// `score_j = grads_j / √L_j`.
pub fn gsl_scores<T: Scalar>(grads: &[T], lipschitz: &[T]) -> Result<Vec<T>> {
    if grads.len() != lipschitz.len() {
        return Err(crate::error::shape_err(grads.len(), lipschitz.len()));
    }
    grads
        .iter()
        .zip(lipschitz)
        .enumerate()
        .map(|(j, (&g, &l))| {
            if l > T::zero() && l.is_finite() {
                Ok(g / l.sqrt())
            } else {
                Err(Error::InvalidLipschitz {
                    index: j,
                    value: l.to_f64_lossy(),
                })
            }
        })
        .collect()
}

/// True iff every window of `window` consecutive entries of `history` covers
/// all of `0..s`. Histories shorter than one window hold vacuously.
pub fn essentially_cyclic_check(history: &[usize], s: usize, window: usize) -> Result<bool> {
    if window < s || s == 0 {
        return Err(Error::WindowTooShort { window, blocks: s });
    }
    if let Some(&bad) = history.iter().find(|&&i| i >= s) {
        return Err(Error::IndexOutOfRange { index: bad, len: s });
    }
    if history.len() < window {
        return Ok(true);
    }
    let mut counts = vec![0usize; s];
    let mut covered = 0usize;
    for (t, &i) in history.iter().enumerate() {
        if counts[i] == 0 {
            covered += 1;
        }
        counts[i] += 1;
        if t >= window {
            let out = history[t - window];
            counts[out] -= 1;
            if counts[out] == 0 {
                covered -= 1;
            }
        }
        if t + 1 >= window && covered < s {
            return Ok(false);
        }
    }
    Ok(true)
}
