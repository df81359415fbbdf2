use fda_hybrid::analytic::uniform_score_kurtosis;
use fda_hybrid::simgen::{
    add_measurement_error, draw_replication, gamma_sequence, kl_basis, BetaChoice, SimDesign,
    Spacing,
};
use fda_hybrid::{empirical_spectrum, fit_spectral_truncation, inner_product, FunctionalDataset};

fn scores_of(data: &FunctionalDataset, j: usize) -> Vec<f64> {
    let basis = kl_basis(data.grid(), j + 1);
    (0..data.n())
        .map(|i| inner_product(&data.curve(i), &basis[j], data.grid()).unwrap())
        .collect()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn score_variances_match_gamma_squared() {
    let design = SimDesign {
        n: 10_000,
        noise_sd: 1.0,
        seed: 5,
        ..SimDesign::default()
    };
    let rep = draw_replication(&design, 0).unwrap();
    let gammas = gamma_sequence(Spacing::WellSpaced, 1.1, 50);
    let kurt = uniform_score_kurtosis();
    for j in 0..6 {
        let s = scores_of(&rep.data, j);
        let (_, var) = mean_var(&s);
        let target = gammas[j] * gammas[j];
        // sd of the sample variance of gamma Z: gamma^2 sqrt(Var(Z^2) / n)
        let se = target * (kurt / design.n as f64).sqrt();
        assert!((var - target).abs() < 3.0 * se, "j = {}: {var} vs {target}", j + 1);
    }
}

#[test]
fn leading_eigenvalue_near_one_at_moderate_n() {
    let design = SimDesign {
        n: 200,
        alpha_decay: 2.0,
        seed: 77,
        ..SimDesign::default()
    };
    let data = draw_replication(&design, 0).unwrap().data;
    let spec = empirical_spectrum(&data).unwrap();
    let se = (uniform_score_kurtosis() / 200.0).sqrt();
    assert!((spec.eigvals()[0] - 1.0).abs() < 3.0 * se, "{}", spec.eigvals()[0]);
}

#[test]
fn empirical_eigenvalues_converge_to_population() {
    let design = SimDesign {
        n: 5000,
        alpha_decay: 2.0,
        seed: 31,
        ..SimDesign::default()
    };
    let data = draw_replication(&design, 0).unwrap().data;
    let spec = empirical_spectrum(&data).unwrap();
    let kurt = uniform_score_kurtosis();
    for j in 0..5 {
        let lam = 1.0 / ((j + 1) * (j + 1)) as f64;
        let se = lam * (kurt / 5000.0).sqrt();
        assert!((spec.eigvals()[j] - lam).abs() < 3.0 * se, "j = {}", j + 1);
    }
}

#[test]
fn noiseless_truncation_recovers_leading_coefficients() {
    let design = SimDesign {
        n: 5000,
        noise_sd: 0.0,
        beta_choice: BetaChoice::Beta2,
        seed: 3,
        ..SimDesign::default()
    };
    let rep = draw_replication(&design, 0).unwrap();
    // oracle: the responses are an exact linear function of the first five
    // true scores, so least squares on those scores returns b_1..b_5
    let basis = kl_basis(rep.data.grid(), 5);
    let want: Vec<f64> = basis
        .iter()
        .map(|phi| inner_product(&rep.beta_true, phi, rep.data.grid()).unwrap())
        .collect();
    let spec = empirical_spectrum(&rep.data).unwrap();
    let est = fit_spectral_truncation(&spec, 5).unwrap();
    for (j, phi) in basis.iter().enumerate() {
        let got = inner_product(&est.beta, phi, rep.data.grid()).unwrap();
        assert!((got - want[j]).abs() < 1e-2, "b_{}: {got} vs {}", j + 1, want[j]);
    }
}

#[test]
fn measurement_error_inflates_the_diagonal() {
    let design = SimDesign {
        n: 5000,
        seed: 8,
        ..SimDesign::default()
    };
    let data = draw_replication(&design, 0).unwrap().data;
    let noisy = add_measurement_error(&data, 1.0, 99).unwrap();
    let diag = |d: &FunctionalDataset| -> f64 {
        let (_, _, c) = fda_hybrid::center(d).unwrap();
        let s = c.x().transpose() * c.x() / d.n() as f64;
        s.diagonal().mean()
    };
    let gain = diag(&noisy) - diag(&data);
    assert!((gain - 1.0).abs() < 0.05, "mean diagonal gain {gain}");
    assert_eq!(noisy.y(), data.y());
}

#[test]
fn replications_are_independent_of_generation_order() {
    let design = SimDesign {
        n: 30,
        seed: 123,
        ..SimDesign::default()
    };
    let forward: Vec<_> = (0..5).map(|k| draw_replication(&design, k).unwrap().data).collect();
    for k in (0..5).rev() {
        assert_eq!(draw_replication(&design, k).unwrap().data, forward[k as usize]);
    }
}

#[test]
fn responses_are_discrete_inner_products_without_noise() {
    let design = SimDesign {
        n: 20,
        noise_sd: 0.0,
        beta_choice: BetaChoice::Beta2,
        ..SimDesign::default()
    };
    let rep = draw_replication(&design, 0).unwrap();
    for i in 0..20 {
        let want = inner_product(&rep.data.curve(i), &rep.beta_true, rep.data.grid()).unwrap();
        assert!((rep.data.y()[i] - want).abs() < 1e-12);
    }
}
