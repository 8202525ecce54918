//! Proximal operators of separable regularizers and their summative
//! compositions.
//!
//! Every operator evaluates `prox_{s·r}(y) = argmin_x r(x) + ‖x − y‖² / (2s)`.
//! Subdifferential formulas live in [`subdiff`]; they are written against the
//! optimality conditions rather than the operators so they can serve as
//! independent certificates.

pub mod subdiff;

use crate::error::{Error, Result};
use crate::numeric::norm;
use crate::scalar::Scalar;

/// Soft thresholding: the prox of `mu |·|`.
pub fn shrink<T: Scalar>(x: T, mu: T) -> T {
    if x > mu {
        x - mu
    } else if x < -mu {
        x + mu
    } else {
        T::zero()
    }
}

pub fn shrink_vec<T: Scalar>(x: &[T], mu: T) -> Vec<T> {
    x.iter().map(|&v| shrink(v, mu)).collect()
}

/// Projection onto `[lo, hi]`.
pub fn project_interval<T: Scalar>(x: T, lo: T, hi: T) -> Result<T> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::InvalidBounds {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    Ok(clip(x, lo, hi))
}

#[inline]
pub(crate) fn clip<T: Scalar>(x: T, lo: T, hi: T) -> T {
    x.max(lo).min(hi)
}

/// Prox of `beta ‖·‖₂`: scales `x` towards the origin by `max(0, ‖x‖ − beta) / ‖x‖`.
pub fn group_shrink<T: Scalar>(x: &[T], beta: T) -> Vec<T> {
    let nx = norm(x);
    if nx <= beta || nx == T::zero() {
        return vec![T::zero(); x.len()];
    }
    let scale = (nx - beta) / nx;
    x.iter().map(|&v| v * scale).collect()
}

/// Exact prox of `beta · Σ |x_{i+1} − x_i|` (1D total variation).
///
/// Direct linear-time algorithm: a forward scan maintains the feasible range
/// of the current segment value and backtracks to the segment start whenever
/// the range collapses, emitting one constant segment at a time.
pub fn prox_tv1d<T: Scalar>(y: &[T], beta: T) -> Vec<T> {
    let n = y.len();
    let mut out = vec![T::zero(); n];
    if n == 0 {
        return out;
    }
    if n == 1 || beta <= T::zero() {
        out.copy_from_slice(y);
        return out;
    }
    let lambda = beta;
    let minlambda = -beta;
    let twolambda = beta + beta;
    let mut k = 0usize;
    let mut k0 = 0usize;
    let mut kplus = 0usize;
    let mut kminus = 0usize;
    let mut umin = lambda;
    let mut umax = minlambda;
    let mut vmin = y[0] - lambda;
    let mut vmax = y[0] + lambda;
    loop {
        while k == n - 1 {
            if umin < T::zero() {
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = y[k];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > T::zero() {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = y[k];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / T::of_usize(k - k0 + 1);
                while k0 <= k {
                    out[k0] = vmin;
                    k0 += 1;
                }
                return out;
            }
        }
        umin += y[k + 1] - vmin;
        if umin < minlambda {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = y[k];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
        } else {
            umax += y[k + 1] - vmax;
            if umax > lambda {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                kplus = k0;
                vmax = y[k];
                vmin = vmax - twolambda;
                umin = lambda;
                umax = minlambda;
            } else {
                k += 1;
                if umin >= lambda {
                    kminus = k;
                    vmin += (umin - lambda) / T::of_usize(k - k0 + 1);
                    umin = lambda;
                }
                if umax <= minlambda {
                    kplus = k;
                    vmax += (umax + lambda) / T::of_usize(k - k0 + 1);
                    umax = minlambda;
                }
            }
        }
    }
}

/// Prox of `alpha |ρ| + (quad / 2) ρ²`, i.e. `shrink(y, alpha) / (1 + quad)`.
pub fn prox_elastic_net<T: Scalar>(y: T, alpha: T, quad: T) -> T {
    shrink(y, alpha) / (T::one() + quad)
}

pub fn total_variation<T: Scalar>(x: &[T]) -> T {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Separable (or block-separable) regularizer `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer<T> {
    Zero,
    /// `weight ‖x‖₁`
    L1 {
        weight: T,
    },
    /// `weight ‖x‖₂` over the whole block
    GroupL2 {
        weight: T,
    },
    /// Indicator of `[lo, hi]` applied to every component.
    Box {
        lo: T,
        hi: T,
    },
    /// Indicator of the nonnegative orthant.
    NonNeg,
    /// `weight · TV(x)`
    Tv1d {
        weight: T,
    },
    /// `l1 ‖x‖₁ + (l2 / 2) ‖x‖₂²`
    ElasticNet {
        l1: T,
        l2: T,
    },
    /// `(weight / 2) ‖x‖₂²`
    SquaredL2 {
        weight: T,
    },
}

impl<T: Scalar> Regularizer<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Zero => "zero",
            Regularizer::L1 { .. } => "l1",
            Regularizer::GroupL2 { .. } => "group_l2",
            Regularizer::Box { .. } => "box",
            Regularizer::NonNeg => "nonneg",
            Regularizer::Tv1d { .. } => "tv1d",
            Regularizer::ElasticNet { .. } => "elastic_net",
            Regularizer::SquaredL2 { .. } => "squared_l2",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad_weight = |w: T| !(w >= T::zero());
        match *self {
            Regularizer::L1 { weight }
            | Regularizer::GroupL2 { weight }
            | Regularizer::Tv1d { weight }
            | Regularizer::SquaredL2 { weight }
                if bad_weight(weight) =>
            {
                Err(Error::InvalidParameter(format!(
                    "{} weight must be nonnegative, got {weight}",
                    self.name()
                )))
            }
            Regularizer::ElasticNet { l1, l2 } if bad_weight(l1) || bad_weight(l2) => {
                Err(Error::InvalidParameter(format!(
                    "elastic net weights must be nonnegative ({l1}, {l2})"
                )))
            }
            Regularizer::Box { lo, hi } if !(lo <= hi) => Err(Error::InvalidBounds {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            }),
            _ => Ok(()),
        }
    }

    /// Acts componentwise (as opposed to coupling the whole block).
    pub fn is_separable(&self) -> bool {
        !matches!(self, Regularizer::GroupL2 { .. } | Regularizer::Tv1d { .. })
    }

    /// `r(x)`; `+∞` outside the domain of an indicator.
    pub fn value(&self, x: &[T]) -> T {
        match *self {
            Regularizer::Zero => T::zero(),
            Regularizer::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<T>(),
            Regularizer::GroupL2 { weight } => weight * norm(x),
            Regularizer::Box { lo, hi } => {
                if x.iter().all(|&v| v >= lo && v <= hi) {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
            Regularizer::NonNeg => {
                if x.iter().all(|&v| v >= T::zero()) {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
            Regularizer::Tv1d { weight } => weight * total_variation(x),
            Regularizer::ElasticNet { l1, l2 } => x
                .iter()
                .map(|&v| l1 * v.abs() + T::half() * l2 * v * v)
                .sum(),
            Regularizer::SquaredL2 { weight } => T::half() * weight * crate::numeric::norm_sq(x),
        }
    }

    /// `prox_{scale · r}(y)`.
    pub fn prox(&self, y: &[T], scale: T) -> Result<Vec<T>> {
        if !(scale > T::zero()) {
            return Err(Error::InvalidStep(scale.to_f64_lossy()));
        }
        self.validate()?;
        Ok(match *self {
            Regularizer::Zero => y.to_vec(),
            Regularizer::L1 { weight } => shrink_vec(y, scale * weight),
            Regularizer::GroupL2 { weight } => group_shrink(y, scale * weight),
            Regularizer::Box { lo, hi } => y.iter().map(|&v| clip(v, lo, hi)).collect(),
            Regularizer::NonNeg => y.iter().map(|&v| v.max(T::zero())).collect(),
            Regularizer::Tv1d { weight } => prox_tv1d(y, scale * weight),
            Regularizer::ElasticNet { l1, l2 } => y
                .iter()
                .map(|&v| prox_elastic_net(v, scale * l1, scale * l2))
                .collect(),
            Regularizer::SquaredL2 { weight } => {
                let d = T::one() + scale * weight;
                y.iter().map(|&v| v / d).collect()
            }
        })
    }
}

/// `prox_{scale · r}(y)` dispatched on the regularizer kind.
pub fn prox_apply<T: Scalar>(r: &Regularizer<T>, y: &[T], scale: T) -> Result<Vec<T>> {
    r.prox(y, scale)
}

/// Structural classes of pairs `f + g` whose joint prox is `prox_g ∘ prox_f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eligibility {
    /// `f` positively homogeneous of order one, `g = β‖·‖₂`.
    HomogeneousPlusL2,
    /// `f = β TV`, `g` with an order-preserving prox.
    TvPlusMonotone,
    /// `f = α|·|`, `g` convex, differentiable, `g'(0) = 0`, acting per scalar.
    ScalarAbsPlusSmooth,
}

impl Eligibility {
    pub const ALL: [Eligibility; 3] = [
        Eligibility::HomogeneousPlusL2,
        Eligibility::TvPlusMonotone,
        Eligibility::ScalarAbsPlusSmooth,
    ];

    fn admits<T: Scalar>(self, f: &Regularizer<T>, g: &Regularizer<T>) -> bool {
        match self {
            Eligibility::HomogeneousPlusL2 => {
                let f_ok = match *f {
                    Regularizer::L1 { .. } | Regularizer::NonNeg => true,
                    // Only boxes that are cones: every bound is 0 or infinite.
                    Regularizer::Box { lo, hi } => {
                        (lo == T::zero() || lo == T::neg_infinity())
                            && (hi == T::zero() || hi == T::infinity())
                    }
                    _ => false,
                };
                f_ok && matches!(g, Regularizer::GroupL2 { .. })
            }
            Eligibility::TvPlusMonotone => {
                matches!(f, Regularizer::Tv1d { .. })
                    && matches!(
                        g,
                        Regularizer::L1 { .. }
                            | Regularizer::GroupL2 { .. }
                            | Regularizer::Box { .. }
                            | Regularizer::NonNeg
                    )
            }
            Eligibility::ScalarAbsPlusSmooth => {
                matches!(f, Regularizer::L1 { .. })
                    && matches!(g, Regularizer::SquaredL2 { .. } | Regularizer::Zero)
            }
        }
    }
}

/// A regularizer `f + g` evaluated through sequential proxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummativePair<T> {
    first: Regularizer<T>,
    second: Regularizer<T>,
    eligibility: Eligibility,
}

impl<T: Scalar> SummativePair<T> {
    pub fn new(
        first: Regularizer<T>,
        second: Regularizer<T>,
        eligibility: Eligibility,
    ) -> Result<Self> {
        first.validate()?;
        second.validate()?;
        if !eligibility.admits(&first, &second) {
            return Err(Error::IneligibleComposition(format!(
                "{} + {} is not of class {eligibility:?}",
                first.name(),
                second.name()
            )));
        }
        Ok(Self {
            first,
            second,
            eligibility,
        })
    }

    /// Picks the first eligibility class admitting `(first, second)`.
    pub fn infer(first: Regularizer<T>, second: Regularizer<T>) -> Result<Self> {
        for e in Eligibility::ALL {
            if e.admits(&first, &second) {
                return Self::new(first, second, e);
            }
        }
        Err(Error::IneligibleComposition(format!(
            "no summative rule covers {} + {}",
            first.name(),
            second.name()
        )))
    }

    pub fn first(&self) -> &Regularizer<T> {
        &self.first
    }

    pub fn second(&self) -> &Regularizer<T> {
        &self.second
    }

    pub fn eligibility(&self) -> Eligibility {
        self.eligibility
    }

    pub fn value(&self, x: &[T]) -> T {
        self.first.value(x) + self.second.value(x)
    }

    pub fn prox(&self, y: &[T], scale: T) -> Result<Vec<T>> {
        let mid = self.first.prox(y, scale)?;
        self.second.prox(&mid, scale)
    }
}

/// `prox_{scale (f + g)}(y) = prox_{scale g}(prox_{scale f}(y))`.
pub fn prox_summative<T: Scalar>(pair: &SummativePair<T>, y: &[T], scale: T) -> Result<Vec<T>> {
    pair.prox(y, scale)
}

#[cfg(test)]
mod tests {
    use super::subdiff::{inclusion_residual, subgradient_residual};
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn shrink_cases() {
        assert_eq!(shrink(3.0, 1.0), 2.0);
        assert_eq!(shrink(0.3, 0.5), 0.0);
        assert_eq!(shrink(-2.0, 0.5), -1.5);
        assert_eq!(shrink(0.5, 0.5), 0.0);
    }

    #[test]
    fn interval_projection() {
        assert_eq!(project_interval(1.5, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(project_interval(-0.2, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(project_interval(0.4, 0.0, 1.0).unwrap(), 0.4);
        assert!(matches!(
            project_interval(0.4, 1.0, 0.0),
            Err(Error::InvalidBounds { .. })
        ));
    }

    #[test]
    fn group_shrink_cases() {
        assert!(close(&group_shrink(&[3.0, 4.0], 1.0), &[2.4, 3.2], 1e-15));
        assert_eq!(group_shrink(&[0.3, 0.4], 1.0), vec![0.0, 0.0]);
        assert_eq!(group_shrink(&[3.0, 4.0], 0.0), vec![3.0, 4.0]);
        assert_eq!(group_shrink(&[0.0, 0.0], 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn tv_cases() {
        assert_eq!(prox_tv1d(&[1.5, 1.5, 1.5], 3.0), vec![1.5, 1.5, 1.5]);
        assert!(close(&prox_tv1d(&[0.0, 2.0], 0.5), &[0.5, 1.5], 1e-15));
        assert!(close(&prox_tv1d(&[0.0, 2.0], 2.0), &[1.0, 1.0], 1e-15));
        assert_eq!(prox_tv1d(&[4.0], 1.0), vec![4.0]);
        assert!(prox_tv1d::<f64>(&[], 1.0).is_empty());
    }

    /// Three-point TV prox by enumeration of the active-set patterns, each
    /// solved in closed form and checked against the optimality conditions.
    fn tv3_oracle(y: [f64; 3], b: f64) -> [f64; 3] {
        let obj = |x: [f64; 3]| {
            b * ((x[1] - x[0]).abs() + (x[2] - x[1]).abs())
                + 0.5 * x.iter().zip(&y).map(|(a, c)| (a - c).powi(2)).sum::<f64>()
        };
        let mut cands = Vec::new();
        let mean = (y[0] + y[1] + y[2]) / 3.0;
        cands.push([mean; 3]);
        for s0 in [-1.0, 1.0] {
            for s1 in [-1.0, 1.0] {
                // x0 = y0 + b s0, x1 = y1 − b s0 + b s1, x2 = y2 − b s1
                cands.push([y[0] + b * s0, y[1] - b * s0 + b * s1, y[2] - b * s1]);
            }
            // merged (x0 = x1), free x2
            let m = (y[0] + y[1]) / 2.0 + b * s0 / 2.0;
            cands.push([m, m, y[2] - b * s0]);
            let m = (y[1] + y[2]) / 2.0 - b * s0 / 2.0;
            cands.push([y[0] + b * s0, m, m]);
        }
        *cands
            .iter()
            .min_by(|a, c| obj(**a).partial_cmp(&obj(**c)).unwrap())
            .unwrap()
    }

    #[test]
    fn tv_matches_three_point_enumeration() {
        let cases = [
            ([0.0, 2.0, 1.0], 0.3),
            ([3.0, -1.0, 2.0], 0.7),
            ([1.0, 1.0, 5.0], 2.5),
            ([0.0, 1.0, 2.0], 0.5),
            ([5.0, 0.0, 5.0], 1.0),
        ];
        for (y, b) in cases {
            let z = prox_tv1d(&y, b);
            let o = tv3_oracle(y, b);
            assert!(close(&z, &o, 1e-12), "y={y:?} b={b}: {z:?} vs {o:?}");
        }
    }

    #[test]
    fn elastic_net_cases() {
        assert_eq!(prox_elastic_net(3.0, 1.0, 1.0), 1.0);
        assert_eq!(prox_elastic_net(0.5, 1.0, 1.0), 0.0);
        assert_eq!(prox_elastic_net(3.0, 0.0, 0.0), 3.0);
    }

    #[test]
    fn prox_apply_dispatch() {
        let l1 = Regularizer::L1 { weight: 1.0 };
        assert_eq!(prox_apply(&l1, &[3.0, -0.3], 1.0).unwrap(), vec![2.0, 0.0]);
        assert_eq!(
            prox_apply(&Regularizer::NonNeg, &[-1.0, 2.0], 7.0).unwrap(),
            vec![0.0, 2.0]
        );
        assert_eq!(
            prox_apply(&Regularizer::Zero, &[-1.0, 2.0], 0.1).unwrap(),
            vec![-1.0, 2.0]
        );
        assert!(matches!(
            prox_apply(&l1, &[1.0], 0.0),
            Err(Error::InvalidStep(_))
        ));
        assert!(prox_apply(&Regularizer::L1 { weight: -1.0 }, &[1.0], 1.0).is_err());
    }

    #[test]
    fn summative_examples() {
        let p = SummativePair::new(
            Regularizer::L1 { weight: 1.0 },
            Regularizer::GroupL2 { weight: 1.0 },
            Eligibility::HomogeneousPlusL2,
        )
        .unwrap();
        let z = prox_summative(&p, &[3.0, 4.0], 1.0).unwrap();
        let s = (13.0f64).sqrt();
        assert!(close(
            &z,
            &[2.0 * (s - 1.0) / s, 3.0 * (s - 1.0) / s],
            1e-15
        ));
        assert_relative_eq!(z[0], 1.4453, epsilon = 1e-4);
        assert_relative_eq!(z[1], 2.1680, epsilon = 1e-4);

        let p = SummativePair::new(
            Regularizer::NonNeg,
            Regularizer::GroupL2 { weight: 1.0 },
            Eligibility::HomogeneousPlusL2,
        )
        .unwrap();
        assert!(close(
            &prox_summative(&p, &[-1.0, 3.0], 1.0).unwrap(),
            &[0.0, 2.0],
            1e-15
        ));

        let p = SummativePair::new(
            Regularizer::Tv1d { weight: 0.5 },
            Regularizer::L1 { weight: 0.5 },
            Eligibility::TvPlusMonotone,
        )
        .unwrap();
        assert!(close(
            &prox_summative(&p, &[0.0, 2.0], 1.0).unwrap(),
            &[0.0, 1.0],
            1e-15
        ));
    }

    #[test]
    fn ineligible_pairs_are_rejected() {
        let bad = [
            (
                Regularizer::GroupL2 { weight: 1.0 },
                Regularizer::L1 { weight: 1.0 },
                Eligibility::HomogeneousPlusL2,
            ),
            (
                Regularizer::Box { lo: -1.0, hi: 1.0 },
                Regularizer::GroupL2 { weight: 1.0 },
                Eligibility::HomogeneousPlusL2,
            ),
            (
                Regularizer::L1 { weight: 1.0 },
                Regularizer::Tv1d { weight: 1.0 },
                Eligibility::TvPlusMonotone,
            ),
            (
                Regularizer::Tv1d { weight: 1.0 },
                Regularizer::SquaredL2 { weight: 1.0 },
                Eligibility::TvPlusMonotone,
            ),
            (
                Regularizer::L1 { weight: 1.0 },
                Regularizer::GroupL2 { weight: 1.0 },
                Eligibility::ScalarAbsPlusSmooth,
            ),
        ];
        for (f, g, e) in bad {
            assert!(
                matches!(
                    SummativePair::new(f, g, e),
                    Err(Error::IneligibleComposition(_))
                ),
                "{f:?} {g:?}"
            );
        }
        assert!(SummativePair::new(
            Regularizer::Box {
                lo: 0.0,
                hi: f64::INFINITY
            },
            Regularizer::GroupL2 { weight: 1.0 },
            Eligibility::HomogeneousPlusL2
        )
        .is_ok());
        assert!(SummativePair::infer(Regularizer::Zero, Regularizer::L1 { weight: 1.0 }).is_err());
    }

    #[test]
    fn reverse_order_is_generally_wrong() {
        // prox_f ∘ prox_g for f = TV, g = ℓ1 violates the joint optimality condition.
        let f = Regularizer::Tv1d { weight: 0.5 };
        let g = Regularizer::L1 { weight: 0.5 };
        let y = [0.0, 2.0, 0.2];
        let wrong = f.prox(&g.prox(&y, 1.0).unwrap(), 1.0).unwrap();
        let pair = SummativePair::new(f, g, Eligibility::TvPlusMonotone).unwrap();
        let right = pair.prox(&y, 1.0).unwrap();
        assert!(inclusion_residual(&pair, &y, &right, 1.0) < 1e-12);
        assert!(inclusion_residual(&pair, &y, &wrong, 1.0) > 1e-3);
    }

    fn vec_strategy(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
        n.prop_flat_map(|k| proptest::collection::vec(-5.0f64..5.0, k))
    }

    fn regularizers() -> Vec<Regularizer<f64>> {
        vec![
            Regularizer::Zero,
            Regularizer::L1 { weight: 0.7 },
            Regularizer::GroupL2 { weight: 1.3 },
            Regularizer::Box { lo: -1.0, hi: 0.5 },
            Regularizer::NonNeg,
            Regularizer::Tv1d { weight: 0.8 },
            Regularizer::ElasticNet { l1: 0.4, l2: 2.0 },
            Regularizer::SquaredL2 { weight: 1.5 },
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn nonexpansive(pair in vec_strategy(1..=6).prop_flat_map(|a| {
            let n = a.len();
            (Just(a), proptest::collection::vec(-5.0f64..5.0, n), 0.1f64..3.0)
        })) {
            let (y, y2, scale) = pair;
            for r in regularizers() {
                let p = r.prox(&y, scale).unwrap();
                let p2 = r.prox(&y2, scale).unwrap();
                prop_assert!(crate::numeric::dist(&p, &p2) <= crate::numeric::dist(&y, &y2) + 1e-12, "{r:?}");
            }
        }

        #[test]
        fn resolvent_identity(y in vec_strategy(1..=8), scale in 0.05f64..4.0) {
            for r in [
                Regularizer::L1 { weight: 0.9 },
                Regularizer::Box { lo: -0.5, hi: 1.0 },
                Regularizer::GroupL2 { weight: 2.0 },
                Regularizer::Tv1d { weight: 0.6 },
                Regularizer::NonNeg,
            ] {
                let z = r.prox(&y, scale).unwrap();
                let v: Vec<f64> = y.iter().zip(&z).map(|(a, b)| (a - b) / scale).collect();
                prop_assert!(subgradient_residual(&r, &z, &v) <= 1e-10, "{r:?} y={y:?} z={z:?}");
            }
        }

        #[test]
        fn l1_prox_is_separable(a in vec_strategy(1..=5), b in vec_strategy(1..=5), mu in 0.0f64..2.0) {
            let r = Regularizer::L1 { weight: mu };
            let mut joined = a.clone();
            joined.extend_from_slice(&b);
            let mut parts = r.prox(&a, 1.0).unwrap();
            parts.extend(r.prox(&b, 1.0).unwrap());
            prop_assert_eq!(r.prox(&joined, 1.0).unwrap(), parts);
        }

        #[test]
        fn tv_preserves_adjacent_order(y in vec_strategy(2..=12), beta in 0.0f64..3.0) {
            let z = prox_tv1d(&y, beta);
            for i in 0..y.len() - 1 {
                if y[i] < y[i + 1] { prop_assert!(z[i] <= z[i + 1]); }
                if y[i] > y[i + 1] { prop_assert!(z[i] >= z[i + 1]); }
            }
        }

        #[test]
        fn tv_is_optimal(y in vec_strategy(1..=40), beta in 0.0f64..3.0) {
            let z = prox_tv1d(&y, beta);
            let v: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - b).collect();
            let r = Regularizer::Tv1d { weight: beta };
            prop_assert!(subgradient_residual(&r, &z, &v) <= 1e-9);
        }

        #[test]
        fn shrink_homogeneity(x in -10.0f64..10.0, mu in 0.0f64..5.0, c in 0.01f64..20.0) {
            let lhs = shrink(c * x, c * mu);
            let rhs = c * shrink(x, mu);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn summative_pairs_satisfy_joint_optimality(y in vec_strategy(1..=8), scale in 0.1f64..3.0) {
            let pairs = [
                (Regularizer::L1 { weight: 0.7 }, Regularizer::GroupL2 { weight: 1.1 }),
                (Regularizer::NonNeg, Regularizer::GroupL2 { weight: 0.9 }),
                (Regularizer::Box { lo: f64::NEG_INFINITY, hi: 0.0 }, Regularizer::GroupL2 { weight: 0.9 }),
                (Regularizer::Tv1d { weight: 0.5 }, Regularizer::L1 { weight: 0.4 }),
                (Regularizer::Tv1d { weight: 0.5 }, Regularizer::Box { lo: -1.0, hi: 0.7 }),
                (Regularizer::Tv1d { weight: 0.5 }, Regularizer::NonNeg),
                (Regularizer::Tv1d { weight: 0.3 }, Regularizer::GroupL2 { weight: 2.0 }),
                (Regularizer::L1 { weight: 0.6 }, Regularizer::SquaredL2 { weight: 1.0 }),
            ];
            for (f, g) in pairs {
                let pair = SummativePair::infer(f, g).unwrap();
                let z = pair.prox(&y, scale).unwrap();
                prop_assert!(inclusion_residual(&pair, &y, &z, scale) <= 1e-8, "{f:?}+{g:?} y={y:?} z={z:?}");
            }
        }
    }
}
