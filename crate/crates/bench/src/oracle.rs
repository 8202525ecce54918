//! Grid-search proximal oracle for one or two variables.

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

/// Cells kept on each side of the incumbent when zooming in.
const ZOOM_HALF_WIDTH: f64 = 10.0;

/// Minimizes `h(x) + ½‖x − y‖²` over a regular grid, then repeatedly re-grids
/// a window around the best point.
pub fn brute_prox_oracle(
    h: impl Fn(&[f64]) -> f64,
    y: &[f64],
    grid: Grid,
    refinements: usize,
) -> Result<Vec<f64>> {
    let n = y.len();
    if n == 0 || n > 2 {
        return Err(BenchError::InvalidConfig(format!(
            "grid oracle supports 1 or 2 variables, got {n}"
        )));
    }
    if !(grid.hi > grid.lo) || grid.steps < 2 {
        return Err(BenchError::InvalidConfig(
            "grid needs lo < hi and at least 2 steps".into(),
        ));
    }
    let obj = |x: &[f64]| {
        let q: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        h(x) + 0.5 * q
    };
    let mut lo = vec![grid.lo; n];
    let mut hi = vec![grid.hi; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..=refinements {
        let width: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) / grid.steps as f64)
            .collect();
        let coord = |d: usize, k: usize| lo[d] + width[d] * k as f64;
        let mut round: Option<(Vec<f64>, f64)> = None;
        let mut visit = |p: Vec<f64>| {
            let v = obj(&p);
            if v.is_finite() && round.as_ref().is_none_or(|(_, bv)| v < *bv) {
                round = Some((p, v));
            }
        };
        if n == 1 {
            for k in 0..=grid.steps {
                visit(vec![coord(0, k)]);
            }
        } else {
            for k0 in 0..=grid.steps {
                for k1 in 0..=grid.steps {
                    visit(vec![coord(0, k0), coord(1, k1)]);
                }
            }
        }
        let (p, v) = round.ok_or(BenchError::OracleFailure)?;
        if best.as_ref().is_none_or(|(_, bv)| v <= *bv) {
            best = Some((p.clone(), v));
        }
        let centre = &best.as_ref().expect("set above").0;
        for d in 0..n {
            lo[d] = centre[d] - ZOOM_HALF_WIDTH * width[d];
            hi[d] = centre[d] + ZOOM_HALF_WIDTH * width[d];
        }
    }
    Ok(best.expect("at least one round").0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: Grid = Grid {
        lo: -10.0,
        hi: 10.0,
        steps: 100,
    };

    #[test]
    fn zero_function_returns_input() {
        let x = brute_prox_oracle(|_| 0.0, &[1.234, -0.5], G, 8).unwrap();
        assert!((x[0] - 1.234).abs() < 1e-6 && (x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn absolute_value_is_soft_threshold() {
        let x = brute_prox_oracle(|x| x[0].abs(), &[3.0], G, 8).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn elastic_net_closed_form() {
        let x = brute_prox_oracle(|x| x[0].abs() + 0.5 * x[0] * x[0], &[3.0], G, 8).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn indicator_outside_grid_fails() {
        let r = brute_prox_oracle(|_| f64::INFINITY, &[0.0], G, 2);
        assert!(matches!(r, Err(BenchError::OracleFailure)));
    }
}
