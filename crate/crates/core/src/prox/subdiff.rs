//! Subdifferential membership tests.
//!
//! `subgradient_residual(r, z, v)` measures how far `v` is from `∂r(z)`;
//! `inclusion_residual(pair, y, z, s)` measures the violation of
//! `0 ∈ ∂f(z) + ∂g(z) + (z − y)/s`. Both return `+∞` when `z` lies outside
//! the domain of an indicator.

use super::{prox_tv1d, Regularizer, SummativePair};
use crate::numeric::norm;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Scalar> Interval<T> {
    fn point(x: T) -> Self {
        Self { lo: x, hi: x }
    }

    fn sym(r: T) -> Self {
        Self { lo: -r, hi: r }
    }

    fn add(self, o: Self) -> Self {
        Self {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }

    fn dist(&self, x: T) -> T {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            T::zero()
        }
    }

    fn clamp(&self, x: T) -> T {
        x.max(self.lo).min(self.hi)
    }
}

/// Componentwise subdifferential of a separable regularizer at `z`;
/// `None` if `z` is outside the domain.
fn separable_intervals<T: Scalar>(r: &Regularizer<T>, z: &[T]) -> Option<Vec<Interval<T>>> {
    let inf = T::infinity();
    let zero = T::zero();
    let l1 = |w: T, x: T| {
        if x > zero {
            Interval::point(w)
        } else if x < zero {
            Interval::point(-w)
        } else {
            Interval::sym(w)
        }
    };
    z.iter()
        .map(|&x| match *r {
            Regularizer::Zero => Some(Interval::point(zero)),
            Regularizer::L1 { weight } => Some(l1(weight, x)),
            Regularizer::SquaredL2 { weight } => Some(Interval::point(weight * x)),
            Regularizer::ElasticNet { l1: a, l2: b } => Some(l1(a, x).add(Interval::point(b * x))),
            Regularizer::NonNeg => {
                if x > zero {
                    Some(Interval::point(zero))
                } else if x == zero {
                    Some(Interval { lo: -inf, hi: zero })
                } else {
                    None
                }
            }
            Regularizer::Box { lo, hi } => {
                if x < lo || x > hi {
                    None
                } else {
                    let a = if x == lo { -inf } else { zero };
                    let b = if x == hi { inf } else { zero };
                    Some(Interval { lo: a, hi: b })
                }
            }
            Regularizer::GroupL2 { .. } | Regularizer::Tv1d { .. } => {
                unreachable!("non-separable regularizer")
            }
        })
        .collect()
}

fn sup_dist<T: Scalar>(v: &[T], iv: &[Interval<T>]) -> T {
    v.iter()
        .zip(iv)
        .map(|(&x, i)| i.dist(x))
        .fold(T::zero(), T::max)
}

/// Checks `v − b ∈ β ∂TV(z)` for some `b` with `b_j ∈ offset_j`, by propagating
/// the running sums `t_j = t_{j−1} + b_j − v_j` that must equal `β s_j` with
/// `s_j ∈ sign(z_{j+1} − z_j)` and `t_{n−1} = 0`. Returns the accumulated gap.
fn tv_residual<T: Scalar>(beta: T, z: &[T], v: &[T], offset: &[Interval<T>]) -> T {
    let n = z.len();
    let mut cur = Interval::point(T::zero());
    let mut gap = T::zero();
    for j in 0..n {
        cur = Interval {
            lo: cur.lo + offset[j].lo - v[j],
            hi: cur.hi + offset[j].hi - v[j],
        };
        let target = if j + 1 < n {
            let d = z[j + 1] - z[j];
            if d > T::zero() {
                Interval::point(beta)
            } else if d < T::zero() {
                Interval::point(-beta)
            } else {
                Interval::sym(beta)
            }
        } else {
            Interval::point(T::zero())
        };
        let lo = cur.lo.max(target.lo);
        let hi = cur.hi.min(target.hi);
        if lo <= hi {
            cur = Interval { lo, hi };
        } else {
            // Disjoint: record the gap and continue from the nearest feasible point.
            gap += lo - hi;
            let p = if cur.hi < target.lo {
                target.lo
            } else {
                target.hi
            };
            cur = Interval::point(target.clamp(p));
        }
    }
    gap
}

/// Distance-type measure of `v ∉ ∂r(z)`; zero iff `v ∈ ∂r(z)`.
pub fn subgradient_residual<T: Scalar>(r: &Regularizer<T>, z: &[T], v: &[T]) -> T {
    assert_eq!(z.len(), v.len());
    match *r {
        Regularizer::GroupL2 { weight } => group_residual(weight, z, v, None),
        Regularizer::Tv1d { weight } => {
            let zero = vec![Interval::point(T::zero()); z.len()];
            tv_residual(weight, z, v, &zero)
        }
        _ => match separable_intervals(r, z) {
            Some(iv) => sup_dist(v, &iv),
            None => T::infinity(),
        },
    }
}

/// `v ∈ ∂(β‖·‖)(z) + A`, with `A` a box of intervals (or `{0}` when absent).
fn group_residual<T: Scalar>(beta: T, z: &[T], v: &[T], extra: Option<&[Interval<T>]>) -> T {
    let nz = norm(z);
    if nz > T::zero() {
        let shifted: Vec<T> = v.iter().zip(z).map(|(&a, &b)| a - beta * b / nz).collect();
        match extra {
            Some(iv) => sup_dist(&shifted, iv),
            None => shifted.iter().fold(T::zero(), |m, x| m.max(x.abs())),
        }
    } else {
        // Distance from v to the box A must not exceed β.
        let d: Vec<T> = match extra {
            Some(iv) => v.iter().zip(iv).map(|(&x, i)| x - i.clamp(x)).collect(),
            None => v.to_vec(),
        };
        (norm(&d) - beta).max(T::zero())
    }
}

/// Violation of `0 ∈ ∂f(z) + ∂g(z) + (z − y)/scale` for a summative pair.
pub fn inclusion_residual<T: Scalar>(pair: &SummativePair<T>, y: &[T], z: &[T], scale: T) -> T {
    assert_eq!(y.len(), z.len());
    let v: Vec<T> = y.iter().zip(z).map(|(&a, &b)| (a - b) / scale).collect();
    let (f, g) = (pair.first(), pair.second());
    match (*f, *g) {
        (Regularizer::Tv1d { weight: bt }, Regularizer::GroupL2 { weight: bg }) => {
            if norm(z) > T::zero() {
                let nz = norm(z);
                let off: Vec<Interval<T>> =
                    z.iter().map(|&x| Interval::point(bg * x / nz)).collect();
                tv_residual(bt, z, &v, &off)
            } else {
                // dist(v, β ∂TV(0)) = ‖prox_{βTV}(v)‖ must not exceed bg.
                (norm(&prox_tv1d(&v, bt)) - bg).max(T::zero())
            }
        }
        (Regularizer::Tv1d { weight: bt }, _) => match separable_intervals(g, z) {
            Some(off) => tv_residual(bt, z, &v, &off),
            None => T::infinity(),
        },
        (_, Regularizer::GroupL2 { weight: bg }) if f.is_separable() => {
            match separable_intervals(f, z) {
                Some(iv) => group_residual(bg, z, &v, Some(&iv)),
                None => T::infinity(),
            }
        }
        _ if f.is_separable() && g.is_separable() => {
            match (separable_intervals(f, z), separable_intervals(g, z)) {
                (Some(a), Some(b)) => {
                    let sum: Vec<Interval<T>> =
                        a.into_iter().zip(b).map(|(p, q)| p.add(q)).collect();
                    sup_dist(&v, &sum)
                }
                _ => T::infinity(),
            }
        }
        _ => T::infinity(),
    }
}
