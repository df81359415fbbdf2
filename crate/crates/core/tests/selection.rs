use fda_hybrid::selection::{
    cv_with_folds, double_cv, default_rho_grid, fold_assignment, gcv_rho, gcv_truncation,
    kfold_cv, select_r_condition, TuningGrid,
};
use fda_hybrid::simgen::{draw_replication, BetaChoice, SimDesign};
use fda_hybrid::{empirical_spectrum, fit, Curve, Error, FunctionalDataset, Grid, Method, Regularizer};
use nalgebra::DMatrix;

fn rank_one_noiseless(n: usize) -> FunctionalDataset {
    let g = Grid::midpoints(20).unwrap();
    let phi = Curve::from_fn(&g, |t| 2f64.sqrt() * (3.0 * std::f64::consts::PI * t).cos()).unwrap();
    let a: Vec<f64> = (0..n).map(|i| ((i as f64) * 1.37).sin() * 2.0 + 0.1 * i as f64).collect();
    let curves: Vec<Curve> = a.iter().map(|&s| phi.scaled(s)).collect();
    FunctionalDataset::new(g, a, &curves).unwrap()
}

fn simulated(n: usize, seed: u64) -> FunctionalDataset {
    draw_replication(
        &SimDesign {
            n,
            seed,
            ..SimDesign::default()
        },
        0,
    )
    .unwrap()
    .data
}

#[test]
fn leave_one_out_on_exact_model_scores_zero() {
    let d = rank_one_noiseless(12);
    let grid = TuningGrid {
        r_values: vec![1],
        rho_values: vec![],
    };
    let sel = kfold_cv(&d, Method::SpectralTruncation, &grid, d.n(), 0).unwrap();
    assert_eq!(sel.r, 1);
    assert!(sel.best_score() < 1e-20, "score {}", sel.best_score());
}

#[test]
fn duplicated_folds_reproduce_in_sample_rss() {
    let d = simulated(30, 4);
    let n = d.n();
    let mut x = DMatrix::zeros(2 * n, d.m());
    x.rows_mut(0, n).copy_from(d.x());
    x.rows_mut(n, n).copy_from(d.x());
    let mut y = d.y().to_vec();
    y.extend_from_slice(d.y());
    let twice = FunctionalDataset::from_matrix(d.grid().clone(), y, x).unwrap();
    let folds = vec![(0..n).collect::<Vec<_>>(), (n..2 * n).collect()];

    for reg in [
        Regularizer::Tikhonov { rho: 0.05 },
        Regularizer::Hybrid { r: 3, rho: 0.01 },
        Regularizer::Truncation { r: 4 },
    ] {
        let sel = cv_with_folds(&twice, reg.method(), &[reg], &folds).unwrap();
        let spec = empirical_spectrum(&twice).unwrap();
        let est = fit(&spec, reg).unwrap();
        let rss: f64 = (0..twice.n())
            .map(|i| (twice.y()[i] - fda_hybrid::predict(&est, &twice.curve(i)).unwrap()).powi(2))
            .sum();
        let want = rss / twice.n() as f64;
        assert!((sel.best_score() - want).abs() < 1e-10 * want.max(1.0), "{reg:?}");
    }
}

#[test]
fn cross_validation_is_deterministic() {
    let d = simulated(60, 8);
    let grid = TuningGrid {
        r_values: vec![1, 2, 3],
        rho_values: default_rho_grid(1.0),
    };
    let a = kfold_cv(&d, Method::Hybrid, &grid, 5, 99).unwrap();
    let b = kfold_cv(&d, Method::Hybrid, &grid, 5, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(fold_assignment(60, 5, 99).unwrap(), fold_assignment(60, 5, 99).unwrap());
    let surface_min = a
        .criterion_surface
        .iter()
        .map(|p| p.score)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(a.best_score(), surface_min);
    assert!(surface_min.is_finite());
}

#[test]
fn double_cv_without_block_is_tikhonov_cv() {
    let d = simulated(50, 12);
    let rhos = default_rho_grid(1.0);
    let dcv = double_cv(&d, 0, &rhos, 10, 3).unwrap();
    let tr = kfold_cv(
        &d,
        Method::Tikhonov,
        &TuningGrid {
            r_values: vec![],
            rho_values: rhos,
        },
        10,
        3,
    )
    .unwrap();
    assert_eq!(dcv.method, Method::Tikhonov);
    assert_eq!(dcv.r, 0);
    assert_eq!(dcv.rho, tr.rho);
    assert_eq!(dcv.best_score(), tr.best_score());
}

#[test]
fn fold_errors() {
    let d = simulated(10, 1);
    assert!(matches!(fold_assignment(10, 1, 0), Err(Error::Fold(_))));
    assert!(matches!(fold_assignment(10, 11, 0), Err(Error::Fold(_))));
    let reg = [Regularizer::Tikhonov { rho: 1.0 }];
    // a training part with a single observation
    let folds = vec![(0..9).collect::<Vec<_>>(), vec![9]];
    assert!(matches!(
        cv_with_folds(&d, Method::Tikhonov, &reg, &folds),
        Err(Error::Fold(_))
    ));
    let overlapping = vec![vec![0, 1, 2, 3, 4], vec![4, 5, 6, 7, 8, 9]];
    assert!(cv_with_folds(&d, Method::Tikhonov, &reg, &overlapping).is_err());
}

#[test]
fn gcv_single_point_and_df_limit() {
    let d = simulated(40, 2);
    let spec = empirical_spectrum(&d).unwrap();
    let sel = gcv_rho(&d, &spec, 2, &[0.3]).unwrap();
    assert_eq!(sel.rho, Some(0.3));
    assert_eq!(sel.r, 2);

    let big = gcv_rho(&d, &spec, 2, &[1e12]).unwrap();
    assert!((big.df_at_optimum - 3.0).abs() < 1e-9);
    let big_tr = gcv_rho(&d, &spec, 0, &[1e12]).unwrap();
    assert_eq!(big_tr.method, Method::Tikhonov);
    assert!((big_tr.df_at_optimum - 1.0).abs() < 1e-9);

    let st = gcv_truncation(&d, &spec, &[1, 2, 3, 4, 5]).unwrap();
    assert!((1..=5).contains(&st.r));
    assert_eq!(st.df_at_optimum, 1.0 + st.r as f64);
}

#[test]
fn gcv_scores_are_infinite_past_saturation() {
    // n = 5: four positive eigenvalues, so r = 4 leaves no tail and df = 5 = n
    let d = simulated(5, 6);
    let spec = empirical_spectrum(&d).unwrap();
    assert_eq!(spec.positive_rank(), 4);
    assert!(matches!(gcv_rho(&d, &spec, 4, &[1e-12, 10.0]), Err(Error::Selection(_))));
    let sel = gcv_rho(&d, &spec, 3, &[1e-3, 10.0]).unwrap();
    assert!(sel.criterion_surface.iter().all(|p| p.score.is_finite()));
}

#[test]
fn condition_rule_on_simulated_spectrum() {
    let d = simulated(200, 21);
    let spec = empirical_spectrum(&d).unwrap();
    let r = select_r_condition(&spec, 30.0).unwrap();
    let idx = spec.condition_indices();
    assert!(idx[r - 1] <= 30.0 + 1e-9);
    if r < idx.len() {
        assert!(idx[r] > 30.0);
    }
}

/// Under a null slope the Tikhonov GCV criterion favours maximal shrinkage.
#[test]
fn gcv_prefers_maximal_shrinkage_under_the_null() {
    let design = SimDesign {
        beta_choice: BetaChoice::Custom(vec![]),
        seed: 2024,
        ..SimDesign::default()
    };
    let reps = 200;
    let mut at_max = 0;
    for rep in 0..reps {
        let d = draw_replication(&design, rep).unwrap().data;
        let spec = empirical_spectrum(&d).unwrap();
        let grid = default_rho_grid(spec.eigvals()[0]);
        let top = *grid.last().unwrap();
        let sel = gcv_rho(&d, &spec, 0, &grid).unwrap();
        if sel.rho == Some(top) {
            at_max += 1;
        }
    }
    let freq = at_max as f64 / reps as f64;
    assert!(freq >= 0.8, "grid maximum chosen in {freq:.3} of replications");
}

fn condition_agreement(n: usize, bound: f64, reps: u64) -> (usize, f64) {
    let design = SimDesign {
        n,
        alpha_decay: 2.0,
        seed: 606,
        ..SimDesign::default()
    };
    let truth = fda_hybrid::simgen::PopulationTruth::from_design(&design).unwrap();
    let target = fda_hybrid::selection::condition_rank(truth.eigvals(), bound).unwrap();
    let hits = (0..reps)
        .filter(|&rep| {
            let d = draw_replication(&design, rep).unwrap().data;
            select_r_condition(&empirical_spectrum(&d).unwrap(), bound).unwrap() == target
        })
        .count();
    (target, hits as f64 / reps as f64)
}

/// The selected rank settles on the population rank as `n` grows.
#[test]
fn condition_rule_is_consistent_at_default_bound() {
    for n in [100, 400, 1600] {
        let (target, freq) = condition_agreement(n, 30.0, 200);
        eprintln!("n = {n}: population r = {target}, agreement {freq:.3}");
        if n == 1600 {
            assert!(freq >= 0.9, "agreement {freq:.3} at n = 1600");
        }
    }
}

#[test]
fn condition_rule_is_consistent_away_from_a_tie() {
    // population indices are j, so 5.5 separates r = 5 from r = 6 by 10%
    let freqs: Vec<f64> = [100, 400, 1600]
        .iter()
        .map(|&n| {
            let (target, freq) = condition_agreement(n, 5.5, 200);
            assert_eq!(target, 5);
            freq
        })
        .collect();
    assert!(freqs[2] >= 0.9, "{freqs:?}");
    assert!(freqs[2] >= freqs[0], "{freqs:?}");
}
