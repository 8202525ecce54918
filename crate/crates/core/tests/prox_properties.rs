use coordesc::prox::subdiff::inclusion_residual;
use coordesc::prox::{prox_tv1d, shrink, total_variation};
use coordesc::{prox_apply, Eligibility, Regularizer, SummativePair};
use proptest::prelude::*;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn regularizers() -> Vec<Regularizer<f64>> {
    vec![
        Regularizer::Zero,
        Regularizer::L1 { weight: 0.7 },
        Regularizer::GroupL2 { weight: 1.3 },
        Regularizer::Box { lo: -0.5, hi: 2.0 },
        Regularizer::NonNeg,
        Regularizer::Tv1d { weight: 0.4 },
        Regularizer::ElasticNet { l1: 0.3, l2: 2.0 },
        Regularizer::SquaredL2 { weight: 1.5 },
    ]
}

proptest! {
    #[test]
    fn prox_is_firmly_nonexpansive(
        u in prop::collection::vec(-5.0f64..5.0, 6),
        v in prop::collection::vec(-5.0f64..5.0, 6),
        scale in 0.1f64..3.0,
    ) {
        for r in regularizers() {
            let pu = prox_apply(&r, &u, scale).unwrap();
            let pv = prox_apply(&r, &v, scale).unwrap();
            let lhs: f64 = pu.iter().zip(&pv).map(|(a, b)| (a - b) * (a - b)).sum();
            let rhs: f64 = pu.iter().zip(&pv).zip(u.iter().zip(&v)).map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
            prop_assert!(lhs <= rhs + 1e-10, "{}", r.name());
        }
    }

    #[test]
    fn prox_minimizes_its_model(
        y in prop::collection::vec(-4.0f64..4.0, 5),
        probe in prop::collection::vec(-4.0f64..4.0, 5),
        scale in 0.2f64..2.0,
    ) {
        for r in regularizers() {
            let z = prox_apply(&r, &y, scale).unwrap();
            let model = |x: &[f64]| scale * r.value(x) + 0.5 * dist(x, &y).powi(2);
            let m_probe = model(&probe);
            if m_probe.is_finite() {
                prop_assert!(model(&z) <= m_probe + 1e-9, "{}", r.name());
            }
        }
    }

    #[test]
    fn composed_prox_satisfies_inclusion(
        y in prop::collection::vec(-4.0f64..4.0, 1..8),
        beta in 0.0f64..2.0,
        alpha in 0.0f64..2.0,
    ) {
        let pairs = [
            SummativePair::new(
                Regularizer::L1 { weight: alpha },
                Regularizer::GroupL2 { weight: beta },
                Eligibility::HomogeneousPlusL2,
            ),
            SummativePair::new(
                Regularizer::Tv1d { weight: beta },
                Regularizer::L1 { weight: alpha },
                Eligibility::TvPlusMonotone,
            ),
        ];
        for pair in pairs {
            let pair = pair.unwrap();
            let z = pair.prox(&y, 1.0).unwrap();
            prop_assert!(inclusion_residual(&pair, &y, &z, 1.0) <= 1e-8);
        }
    }

    #[test]
    fn tv_prox_does_not_raise_total_variation(y in prop::collection::vec(-3.0f64..3.0, 1..12), beta in 0.0f64..2.0) {
        let z = prox_tv1d(&y, beta);
        prop_assert!(total_variation(&z) <= total_variation(&y) + 1e-12);
        let mean_y: f64 = y.iter().sum::<f64>() / y.len() as f64;
        let mean_z: f64 = z.iter().sum::<f64>() / z.len() as f64;
        prop_assert!((mean_y - mean_z).abs() <= 1e-10);
    }
}

#[test]
fn shrink_matches_moreau_decomposition() {
    // prox of |·| plus projection onto [−μ, μ] recovers the input.
    for &x in &[-3.0, -0.2, 0.0, 0.5, 4.0] {
        let mu = 0.7;
        assert!((shrink(x, mu) + f64::clamp(x, -mu, mu) - x).abs() < 1e-15);
    }
}
