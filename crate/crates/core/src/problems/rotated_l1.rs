//! `f_ε(x, y) = ℓ(cos ε·x + sin ε·y, cos ε·y − sin ε·x)` with
//! `ℓ(u, v) = |u| + 2|v|`: a convex nonsmooth function on which exact
//! coordinate minimization can stall away from the minimizer.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    X,
    Y,
}

#[derive(Debug, Clone, Copy)]
pub struct RotatedL1Problem<T> {
    epsilon: T,
    cos: T,
    sin: T,
    point: (T, T),
}

impl<T: Scalar> RotatedL1Problem<T> {
    pub fn new(epsilon: T, start: (T, T)) -> Self {
        Self {
            epsilon,
            cos: epsilon.cos(),
            sin: epsilon.sin(),
            point: start,
        }
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn point(&self) -> (T, T) {
        self.point
    }

    pub fn objective_at(&self, (x, y): (T, T)) -> T {
        let u = self.cos * x + self.sin * y;
        let v = self.cos * y - self.sin * x;
        u.abs() + T::two() * v.abs()
    }

    pub fn objective(&self) -> T {
        self.objective_at(self.point)
    }

    /// Exact minimizer of `f_ε` along one coordinate at `point`, found among
    /// the kinks of the two absolute values; ties go to the kink nearer the
    /// current value.
    pub fn coord_min(&self, point: (T, T), which: Coord) -> T {
        let (x, y) = point;
        let (c, s) = (self.cos, self.sin);
        // Each term is |p·t + q| in the free variable t.
        let (terms, current) = match which {
            Coord::Y => ([(s, c * x), (c, -s * x)], y),
            Coord::X => ([(c, s * y), (-s, c * y)], x),
        };
        let eval = |t: T| match which {
            Coord::Y => self.objective_at((x, t)),
            Coord::X => self.objective_at((t, y)),
        };
        let mut best: Option<(T, T)> = None;
        for (p, q) in terms {
            if p == T::zero() {
                continue;
            }
            let t = -q / p;
            let f = eval(t);
            best = match best {
                None => Some((t, f)),
                Some((bt, bf)) => {
                    if f < bf || (f == bf && (t - current).abs() < (bt - current).abs()) {
                        Some((t, f))
                    } else {
                        Some((bt, bf))
                    }
                }
            };
        }
        best.map_or(current, |(t, _)| t)
    }

    /// Minimizes over `x`, then `y`, in place.
    pub fn sweep(&mut self) {
        let x = self.coord_min(self.point, Coord::X);
        self.point.0 = x;
        let y = self.coord_min(self.point, Coord::Y);
        self.point.1 = y;
    }
}

/// Free-function form of [`RotatedL1Problem::coord_min`].
pub fn rotated_l1_coord_min<T: Scalar>(p: &RotatedL1Problem<T>, point: (T, T), which: Coord) -> T {
    p.coord_min(point, which)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

    #[test]
    fn stall_at_quarter_turn() {
        let mut p = RotatedL1Problem::new(FRAC_PI_4, (1.0, 1.0));
        assert!((p.objective() - SQRT_2).abs() < 1e-12);
        assert!((p.coord_min((1.0, 1.0), Coord::Y) - 1.0).abs() < 1e-12);
        for _ in 0..10 {
            p.sweep();
            let (x, y) = p.point();
            assert!((x - 1.0).abs() < 1e-12 && (y - 1.0).abs() < 1e-12);
            assert!((p.objective() - SQRT_2).abs() < 1e-12);
        }
        assert_eq!(p.objective_at((0.0, 0.0)), 0.0);
    }

    #[test]
    fn small_rotation_converges() {
        let mut p = RotatedL1Problem::new(PI / 10.0, (8.0, -6.0));
        let mut sweeps = 0;
        while p.objective() > 1e-6 && sweeps < 200 {
            p.sweep();
            sweeps += 1;
        }
        assert!(
            p.objective() <= 1e-6,
            "objective {} after {sweeps}",
            p.objective()
        );
    }

    #[test]
    fn separable_case_goes_to_zero() {
        let p = RotatedL1Problem::new(0.0, (3.0, -7.0));
        assert_eq!(rotated_l1_coord_min(&p, (3.0, -7.0), Coord::Y), 0.0);
        assert_eq!(p.coord_min((3.0, -7.0), Coord::X), 0.0);
    }

    #[test]
    fn coordinate_minimum_beats_a_grid() {
        let p = RotatedL1Problem::new(0.37, (0.0, 0.0));
        for &(x, y) in &[(1.3, -0.4), (-2.0, 5.0), (0.2, 0.2)] {
            let t = p.coord_min((x, y), Coord::Y);
            let f = p.objective_at((x, t));
            for k in -400..=400 {
                let g = p.objective_at((x, k as f64 * 0.025));
                assert!(f <= g + 1e-12);
            }
        }
    }
}
