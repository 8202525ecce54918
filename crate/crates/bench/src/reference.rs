//! High-accuracy reference minimizers from full proximal gradient steps with
//! optional extrapolation (FISTA with function-value restart).

use coordesc::prox::shrink;
use coordesc::{CompositeProblem, Lasso, Logistic, Quadratic, SvmDual};

use crate::error::{BenchError, Result};

/// Smooth part plus a prox-friendly regularizer, evaluated at arbitrary points.
pub trait ReferenceProblem: Clone {
    fn dim(&self) -> usize;

    /// Lipschitz constant of the full gradient of the smooth part.
    fn lipschitz(&self) -> f64;

    fn start(&self) -> Vec<f64>;

    /// Moves the problem to `x` and returns the smooth gradient there.
    fn gradient_at(&mut self, x: &[f64]) -> Result<Vec<f64>>;

    fn objective_at(&self, x: &[f64]) -> Result<f64>;

    /// `prox_{step·r}(v)`.
    fn prox(&self, v: &[f64], step: f64) -> Vec<f64>;
}

impl ReferenceProblem for Lasso {
    fn dim(&self) -> usize {
        self.cols()
    }

    fn lipschitz(&self) -> f64 {
        self.global_lipschitz()
    }

    fn start(&self) -> Vec<f64> {
        self.x().to_vec()
    }

    fn gradient_at(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.set_x(x.to_vec())?;
        Ok(self.gradient())
    }

    fn objective_at(&self, x: &[f64]) -> Result<f64> {
        Ok(Lasso::objective_at(self, x)?)
    }

    fn prox(&self, v: &[f64], step: f64) -> Vec<f64> {
        v.iter().map(|&t| shrink(t, step)).collect()
    }
}

impl ReferenceProblem for Logistic {
    fn dim(&self) -> usize {
        self.features()
    }

    fn lipschitz(&self) -> f64 {
        self.global_lipschitz()
    }

    fn start(&self) -> Vec<f64> {
        self.w().to_vec()
    }

    fn gradient_at(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.set_w(x.to_vec())?;
        Ok(self.gradient())
    }

    fn objective_at(&self, x: &[f64]) -> Result<f64> {
        Ok(Logistic::objective_at(self, x)?)
    }

    fn prox(&self, v: &[f64], step: f64) -> Vec<f64> {
        v.iter().map(|&t| shrink(t, step)).collect()
    }
}

impl ReferenceProblem for SvmDual {
    fn dim(&self) -> usize {
        self.alpha().len()
    }

    fn lipschitz(&self) -> f64 {
        self.global_lipschitz()
    }

    fn start(&self) -> Vec<f64> {
        self.alpha().to_vec()
    }

    /// `Qx − 1`, computed directly since extrapolated points may leave the box.
    fn gradient_at(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.q().matvec(x).into_iter().map(|v| v - 1.0).collect())
    }

    fn objective_at(&self, x: &[f64]) -> Result<f64> {
        Ok(SvmDual::objective_at(self, x)?)
    }

    fn prox(&self, v: &[f64], _: f64) -> Vec<f64> {
        let c = self.c();
        v.iter().map(|&t| t.clamp(0.0, c)).collect()
    }
}

impl ReferenceProblem for Quadratic {
    fn dim(&self) -> usize {
        self.x().len()
    }

    fn lipschitz(&self) -> f64 {
        coordesc::numeric::spectral_norm_sq(self.h(), 500, 1e-14).sqrt()
    }

    fn start(&self) -> Vec<f64> {
        self.x().to_vec()
    }

    fn gradient_at(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        for (i, &v) in x.iter().enumerate() {
            self.set_block(i, &[v])?;
        }
        (0..x.len())
            .map(|i| Ok(self.block_gradient(i)?[0]))
            .collect()
    }

    fn objective_at(&self, x: &[f64]) -> Result<f64> {
        Ok(Quadratic::objective_at(self, x)?)
    }

    fn prox(&self, v: &[f64], _: f64) -> Vec<f64> {
        v.to_vec()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReferenceOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub extrapolation: bool,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2_000_000,
            extrapolation: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub x: Vec<f64>,
    pub objective: f64,
    pub grad_map_norm: f64,
    pub iterations: usize,
}

fn grad_map_norm(x: &[f64], p: &[f64]) -> f64 {
    x.iter()
        .zip(p)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Runs until the gradient-map norm `‖x − prox_{r/L}(x − ∇f(x)/L)‖` is at
/// most `tol`.
pub fn reference_solve<P: ReferenceProblem>(problem: &P, tol: f64) -> Result<Reference> {
    reference_solve_with(
        problem,
        ReferenceOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn reference_solve_with<P: ReferenceProblem>(
    problem: &P,
    opts: ReferenceOptions,
) -> Result<Reference> {
    if !(opts.tol > 0.0) {
        return Err(BenchError::InvalidConfig(format!(
            "tolerance {} must be positive",
            opts.tol
        )));
    }
    let mut work = problem.clone();
    let l = work.lipschitz();
    if !(l > 0.0 && l.is_finite()) {
        return Err(coordesc::Error::InvalidLipschitz { index: 0, value: l }.into());
    }
    let step = 1.0 / l;
    let forward = |work: &mut P, y: &[f64]| -> Result<Vec<f64>> {
        let g = work.gradient_at(y)?;
        let v: Vec<f64> = y.iter().zip(&g).map(|(&a, &b)| a - step * b).collect();
        Ok(work.prox(&v, step))
    };
    let mut x = work.start();
    let mut f_x = work.objective_at(&x)?;
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut last_map = f64::INFINITY;
    for it in 0..opts.max_iter {
        // Stationarity is measured at x itself.
        let px = forward(&mut work, &x)?;
        last_map = grad_map_norm(&x, &px);
        if last_map <= opts.tol {
            return Ok(Reference {
                objective: f_x,
                x,
                grad_map_norm: last_map,
                iterations: it,
            });
        }
        if !opts.extrapolation {
            f_x = work.objective_at(&px)?;
            x = px;
            continue;
        }
        let x_new = forward(&mut work, &y)?;
        let f_new = work.objective_at(&x_new)?;
        if f_new > f_x {
            // Restart from a plain step, which never increases the objective.
            t = 1.0;
            y = px.clone();
            f_x = work.objective_at(&px)?;
            x = px;
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        y = x_new
            .iter()
            .zip(&x)
            .map(|(&a, &b)| a + beta * (a - b))
            .collect();
        x = x_new;
        f_x = f_new;
        t = t_new;
    }
    Err(BenchError::ReferenceStalled {
        achieved: last_map,
        iterations: opts.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use coordesc::Matrix;

    #[test]
    fn identity_lasso_matches_closed_form() {
        let p = Lasso::new(&Matrix::identity(2), vec![2.0, 0.1], 1.0).unwrap();
        let r = reference_solve(&p, 1e-10).unwrap();
        assert!((r.x[0] - 1.0).abs() <= 1e-10 && r.x[1].abs() <= 1e-10);
        assert!(r.grad_map_norm <= 1e-10);
    }

    #[test]
    fn quadratic_reference_is_origin() {
        let p = Quadratic::demo();
        let r = reference_solve(&p, 1e-12).unwrap();
        assert!(r.x.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn svm_reference_is_feasible() {
        let (p, _) = crate::generators::gen_svm(40, 5, 2.0, 1.0, 3).unwrap();
        let r = reference_solve(&p, 1e-8).unwrap();
        assert!(r.x.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }
}
