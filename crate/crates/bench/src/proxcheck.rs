//! Randomized agreement check of composed proxes against the grid oracle and
//! the optimality inclusion `0 ∈ ∂f(z) + ∂g(z) + (z − y)`.

use coordesc::prox::subdiff::inclusion_residual;
use coordesc::{Eligibility, Regularizer, SummativePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::oracle::{brute_prox_oracle, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    L1PlusL2,
    NonNegPlusL2,
    TvPlusL1,
    TvPlusBox,
    ScalarL1PlusQuadratic,
}

impl PairKind {
    pub const ALL: [PairKind; 5] = [
        PairKind::L1PlusL2,
        PairKind::NonNegPlusL2,
        PairKind::TvPlusL1,
        PairKind::TvPlusBox,
        PairKind::ScalarL1PlusQuadratic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PairKind::L1PlusL2 => "l1+l2",
            PairKind::NonNegPlusL2 => "nonneg+l2",
            PairKind::TvPlusL1 => "tv+l1",
            PairKind::TvPlusBox => "tv+box",
            PairKind::ScalarL1PlusQuadratic => "l1+quadratic",
        }
    }

    /// A random instance of the pair. Box bounds sit on a 0.1 lattice so the
    /// oracle grid contains them.
    pub fn sample(self, rng: &mut ChaCha8Rng) -> Result<SummativePair<f64>> {
        let mut w = || rng.random_range(0.1..2.0);
        let (f, g, class) = match self {
            PairKind::L1PlusL2 => (
                Regularizer::L1 { weight: w() },
                Regularizer::GroupL2 { weight: w() },
                Eligibility::HomogeneousPlusL2,
            ),
            PairKind::NonNegPlusL2 => (
                Regularizer::NonNeg,
                Regularizer::GroupL2 { weight: w() },
                Eligibility::HomogeneousPlusL2,
            ),
            PairKind::TvPlusL1 => (
                Regularizer::Tv1d { weight: w() },
                Regularizer::L1 { weight: w() },
                Eligibility::TvPlusMonotone,
            ),
            PairKind::TvPlusBox => {
                let tv = w();
                let lo = -(rng.random_range(1..=20) as f64) / 10.0;
                let hi = rng.random_range(1..=20) as f64 / 10.0;
                (
                    Regularizer::Tv1d { weight: tv },
                    Regularizer::Box { lo, hi },
                    Eligibility::TvPlusMonotone,
                )
            }
            PairKind::ScalarL1PlusQuadratic => (
                Regularizer::L1 { weight: w() },
                Regularizer::SquaredL2 { weight: w() },
                Eligibility::ScalarAbsPlusSmooth,
            ),
        };
        Ok(SummativePair::new(f, g, class)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProxCheckOptions {
    pub seed: u64,
    /// Inputs with `n ≤ 2` compared against the grid oracle.
    pub grid_cases: usize,
    /// Inputs with `n ≤ 8` checked through the inclusion residual only.
    pub inclusion_cases: usize,
    pub grid: Grid,
    pub refinements: usize,
}

impl Default for ProxCheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            grid_cases: 500,
            inclusion_cases: 500,
            grid: Grid {
                lo: -4.0,
                hi: 4.0,
                steps: 80,
            },
            refinements: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairReport {
    pub kind: PairKind,
    /// Largest sup-norm gap to the oracle.
    pub max_oracle_gap: f64,
    /// Largest inclusion residual over all inputs.
    pub max_residual: f64,
    pub cases: usize,
}

fn pair_seed(base: u64, kind: PairKind, phase: u64) -> u64 {
    base ^ ((kind as u64 + 1) << 40) ^ (phase << 56)
}

pub fn check_pair(kind: PairKind, opts: &ProxCheckOptions) -> Result<PairReport> {
    let scalar = kind == PairKind::ScalarL1PlusQuadratic;
    let grid_results: Vec<(f64, f64)> = (0..opts.grid_cases)
        .into_par_iter()
        .map(|case| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(opts.seed, kind, 1) ^ case as u64);
            let pair = kind.sample(&mut rng)?;
            let n = if scalar { 1 } else { rng.random_range(1..=2) };
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let z = pair.prox(&y, 1.0)?;
            let oracle = brute_prox_oracle(|x| pair.value(x), &y, opts.grid, opts.refinements)?;
            let gap = z
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok((gap, inclusion_residual(&pair, &y, &z, 1.0)))
        })
        .collect::<Result<_>>()?;
    let incl_results: Vec<f64> = (0..opts.inclusion_cases)
        .into_par_iter()
        .map(|case| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(opts.seed, kind, 2) ^ case as u64);
            let pair = kind.sample(&mut rng)?;
            let n = rng.random_range(1..=8);
            let scale = rng.random_range(0.25..4.0);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let z = pair.prox(&y, scale)?;
            Ok(inclusion_residual(&pair, &y, &z, scale))
        })
        .collect::<Result<_>>()?;
    let max_oracle_gap = grid_results.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_residual = grid_results
        .iter()
        .map(|r| r.1)
        .chain(incl_results.iter().copied())
        .fold(0.0, f64::max);
    Ok(PairReport {
        kind,
        max_oracle_gap,
        max_residual,
        cases: opts.grid_cases + opts.inclusion_cases,
    })
}

pub fn prox_check(opts: &ProxCheckOptions) -> Result<Vec<PairReport>> {
    PairKind::ALL.iter().map(|&k| check_pair(k, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_agrees() {
        let opts = ProxCheckOptions {
            grid_cases: 20,
            inclusion_cases: 20,
            ..Default::default()
        };
        for r in prox_check(&opts).unwrap() {
            assert!(r.max_oracle_gap <= 1e-5, "{:?}", r);
            assert!(r.max_residual <= 1e-8, "{:?}", r);
        }
    }
}
