use coordesc::selection::greedy_argmax;
use coordesc::{
    CoordinateProblem, DenseMatrix, GreedyRule, IndexRule, IndexRuleState, Lasso, LassoProblem,
    Logistic, Matrix, SvmDual,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    Matrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
}

/// Largest per-update objective increase over `updates` steps of `rule`.
fn worst_rise<P: CoordinateProblem<f64>>(p: &mut P, rule: IndexRule, updates: usize) -> f64 {
    let s = p.num_blocks();
    let mut state = IndexRuleState::from_rule(rule, s, 5, None).unwrap();
    let mut prev = p.objective();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..updates {
        let i = match rule {
            IndexRule::Greedy(g) => greedy_argmax(&p.scores(g).unwrap(), g.sense()).unwrap(),
            _ => state.next_index(s).unwrap(),
        };
        p.update(i).unwrap();
        let f = p.objective();
        worst = worst.max(f - prev);
        prev = f;
    }
    worst
}

#[test]
fn lasso_sweeps_never_increase_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_matrix(&mut rng, 30, 60);
    let b: Vec<f64> = (0..30).map(|_| rng.random_range(-2.0..2.0)).collect();
    for rule in [
        IndexRule::Cyclic,
        IndexRule::Greedy(GreedyRule::GsS),
        IndexRule::Greedy(GreedyRule::GsQ),
    ] {
        let mut p = Lasso::new(&a, b.clone(), 10.0).unwrap();
        assert!(worst_rise(&mut p, rule, 60 * 50) <= 1e-12, "{rule}");
    }
}

#[test]
fn svm_sweeps_never_increase_objective_and_stay_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_matrix(&mut rng, 80, 6);
    let y: Vec<f64> = (0..80)
        .map(|i| if i % 3 == 0 { -1.0 } else { 1.0 })
        .collect();
    let mut p = SvmDual::from_samples(&x, &y, 0.5).unwrap();
    assert!(worst_rise(&mut p, IndexRule::Cyclic, 80 * 40) <= 1e-12);
    assert!(p.is_feasible());
}

#[test]
fn logistic_converges_under_every_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_matrix(&mut rng, 60, 4);
    let y: Vec<f64> = (0..60)
        .map(|i| {
            if x[(i, 0)] + 0.3 * rng.random_range(-1.0..1.0) > 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    for rule in [
        IndexRule::Cyclic,
        IndexRule::Random,
        IndexRule::Greedy(GreedyRule::GsR),
    ] {
        let mut p = Logistic::new(&x, y.clone(), 1.0).unwrap();
        worst_rise(&mut p, rule, 4 * 300);
        assert!(p.stationarity() <= 1e-8, "{rule}: {}", p.stationarity());
    }
}

#[test]
fn single_precision_lasso_descends() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = DenseMatrix::<f32>::from_fn(20, 10, |_, _| rng.random_range(-1.0f32..1.0));
    let b: Vec<f32> = (0..20).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let mut p = LassoProblem::<f32>::new(&a, b, 5.0).unwrap();
    let start = p.objective();
    for k in 0..10 * 200 {
        p.update(k % 10).unwrap();
    }
    assert!(p.objective() < start);
    assert!(p.stationarity() <= 1e-3);
}

#[test]
fn full_update_matches_coordinate_fixed_point() {
    // At a coordinate-wise fixed point the full prox-gradient step does not move.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_matrix(&mut rng, 15, 8);
    let b: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut p = Lasso::new(&a, b, 3.0).unwrap();
    for k in 0..8 * 2000 {
        p.update(k % 8).unwrap();
    }
    let before = p.variables();
    p.full_update().unwrap();
    let moved: f64 = before
        .iter()
        .zip(p.variables())
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    assert!(moved <= 1e-10, "{moved}");
}
