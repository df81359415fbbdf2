//! Closed-form mean squared error of the oracle Tikhonov and hybrid
//! estimators on a finite Karhunen-Loeve population.
//!
//! With `b_j = <beta, phi_j>`, `kappa_j = Var(<X, phi_j>^2) / lambda_j^2`,
//! `Q = <K beta, beta> + sigma^2` and
//! `v_j = b_j^2 (kappa_j - 1) lambda_j^2 + lambda_j Q`,
//!
//! ```text
//! MSE_TR = n^{-1} sum_j (lambda_j + rho)^{-2} v_j + rho^2 sum_j (lambda_j + rho)^{-2} b_j^2
//! MSE_HR = n^{-1} sum_{j<=r} lambda_j^{-2} v_j + n^{-1} sum_{j>r} (lambda_j + rho)^{-2} v_j
//!        + rho^2 sum_{j>r} (lambda_j + rho)^{-2} b_j^2
//! ```
//!
//! The expansions assume independent scores and population-centred
//! cross-covariances; with sample centering there is an extra `O(1/n)` bias
//! term that these formulas do not carry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fda::Curve;

/// `Var(Z^2)` for standard Gaussian scores.
pub const GAUSSIAN_SCORE_KURTOSIS: f64 = 2.0;

/// Unit-variance distributions for Karhunen-Loeve scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreDistribution {
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    #[default]
    Uniform,
    Gaussian,
    /// `+-1` with equal probability; `Z^2` is constant.
    Rademacher,
}

impl ScoreDistribution {
    /// `Var(Z^2)`.
    pub fn kurtosis(self) -> f64 {
        match self {
            ScoreDistribution::Uniform => uniform_score_kurtosis(),
            ScoreDistribution::Gaussian => GAUSSIAN_SCORE_KURTOSIS,
            ScoreDistribution::Rademacher => 0.0,
        }
    }
}

/// `Var(Z^2)` for `Z` uniform on `[-sqrt 3, sqrt 3]`: `E Z^4 = a^4 / 5` with
/// `a^2 = 3`, so `9/5 - 1`.
pub fn uniform_score_kurtosis() -> f64 {
    let a2 = 3.0_f64;
    a2 * a2 / 5.0 - (a2 / 3.0).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationModel {
    /// Strictly decreasing, positive.
    eigvals: Vec<f64>,
    beta_coeffs: Vec<f64>,
    sigma2: f64,
    coeff_kurtosis: Vec<f64>,
    split_r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eigfuns: Option<Vec<Curve>>,
}

impl PopulationModel {
    pub fn new(
        eigvals: Vec<f64>,
        beta_coeffs: Vec<f64>,
        sigma2: f64,
        coeff_kurtosis: Vec<f64>,
        split_r: usize,
    ) -> Result<Self> {
        let j = eigvals.len();
        if beta_coeffs.len() != j {
            return Err(Error::Dimension {
                expected: j,
                found: beta_coeffs.len(),
            });
        }
        if coeff_kurtosis.len() != j {
            return Err(Error::Dimension {
                expected: j,
                found: coeff_kurtosis.len(),
            });
        }
        if eigvals.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::Domain("eigenvalues must be positive".into()));
        }
        if eigvals.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Domain("eigenvalues must be strictly decreasing".into()));
        }
        if coeff_kurtosis.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::Domain("kurtosis must be nonnegative".into()));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Domain("noise variance must be positive".into()));
        }
        if split_r > j {
            return Err(Error::Domain(format!(
                "split r = {split_r} exceeds the {j} population components"
            )));
        }
        if beta_coeffs.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("slope coefficients"));
        }
        Ok(Self {
            eigvals,
            beta_coeffs,
            sigma2,
            coeff_kurtosis,
            split_r,
            eigfuns: None,
        })
    }

    pub fn with_eigfuns(mut self, eigfuns: Vec<Curve>) -> Result<Self> {
        if eigfuns.len() != self.eigvals.len() {
            return Err(Error::Dimension {
                expected: self.eigvals.len(),
                found: eigfuns.len(),
            });
        }
        self.eigfuns = Some(eigfuns);
        Ok(self)
    }

    pub fn with_split(mut self, r: usize) -> Result<Self> {
        if r > self.eigvals.len() {
            return Err(Error::Domain(format!(
                "split r = {r} exceeds the {} population components",
                self.eigvals.len()
            )));
        }
        self.split_r = r;
        Ok(self)
    }

    /// Number of components `J`.
    pub fn len(&self) -> usize {
        self.eigvals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigvals.is_empty()
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn beta_coeffs(&self) -> &[f64] {
        &self.beta_coeffs
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn coeff_kurtosis(&self) -> &[f64] {
        &self.coeff_kurtosis
    }

    pub fn split_r(&self) -> usize {
        self.split_r
    }

    pub fn eigfuns(&self) -> Option<&[Curve]> {
        self.eigfuns.as_deref()
    }

    /// `<K beta, beta> = sum_j lambda_j b_j^2`.
    pub fn k_beta_beta(&self) -> f64 {
        self.eigvals
            .iter()
            .zip(&self.beta_coeffs)
            .map(|(l, b)| l * b * b)
            .sum()
    }

    /// Per-component variance numerator `v_j`.
    fn variance_terms(&self) -> Vec<f64> {
        let q = self.k_beta_beta() + self.sigma2;
        self.eigvals
            .iter()
            .zip(&self.beta_coeffs)
            .zip(&self.coeff_kurtosis)
            .map(|((&l, &b), &k)| b * b * (k - 1.0) * l * l + l * q)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseBreakdown {
    pub mse: f64,
    pub bias2: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationGap {
    pub gap: f64,
    pub a1: f64,
    pub a2: f64,
}

fn check(rho: f64, n: usize) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Ok(())
}

pub fn oracle_tr_mse(model: &PopulationModel, rho: f64, n: usize) -> Result<MseBreakdown> {
    check(rho, n)?;
    let v = model.variance_terms();
    let mut var = 0.0;
    let mut bias2 = 0.0;
    for ((&l, &b), &vj) in model.eigvals.iter().zip(&model.beta_coeffs).zip(&v) {
        let s = (l + rho).powi(-2);
        var += s * vj;
        bias2 += s * b * b;
    }
    let variance = var / n as f64;
    let bias2 = rho * rho * bias2;
    Ok(MseBreakdown {
        mse: bias2 + variance,
        bias2,
        variance,
    })
}

pub fn oracle_hr_mse(model: &PopulationModel, rho: f64, n: usize) -> Result<MseBreakdown> {
    check(rho, n)?;
    let r = model.split_r;
    let v = model.variance_terms();
    let mut var = 0.0;
    let mut bias2 = 0.0;
    for (j, ((&l, &b), &vj)) in model.eigvals.iter().zip(&model.beta_coeffs).zip(&v).enumerate() {
        if j < r {
            var += vj / (l * l);
        } else {
            let s = (l + rho).powi(-2);
            var += s * vj;
            bias2 += s * b * b;
        }
    }
    let variance = var / n as f64;
    let bias2 = rho * rho * bias2;
    Ok(MseBreakdown {
        mse: bias2 + variance,
        bias2,
        variance,
    })
}

/// `MSE_TR - MSE_HR = n^{-1} A_1 + rho^2 A_2`, where both sums run over the
/// unpenalised block:
/// `A_1 = sum_{j<=r} ((lambda_j + rho)^{-2} - lambda_j^{-2}) v_j` and
/// `A_2 = sum_{j<=r} (lambda_j + rho)^{-2} b_j^2`.
pub fn domination_gap(model: &PopulationModel, rho: f64, n: usize) -> Result<DominationGap> {
    check(rho, n)?;
    let nf = n as f64;
    let v = model.variance_terms();
    // tail terms are shared by both estimators and cancel exactly
    let gap = (0..model.split_r)
        .map(|j| {
            let l = model.eigvals[j];
            let b = model.beta_coeffs[j];
            let s = (l + rho).powi(-2);
            (s * v[j] / nf + rho * rho * s * b * b) - v[j] / (l * l * nf)
        })
        .sum();
    let (a1, a2) = gap_components(model, rho);
    Ok(DominationGap { gap, a1, a2 })
}

fn gap_components(model: &PopulationModel, rho: f64) -> (f64, f64) {
    let r = model.split_r;
    let v = model.variance_terms();
    let mut a1 = 0.0;
    let mut a2 = 0.0;
    for j in 0..r {
        let l = model.eigvals[j];
        let b = model.beta_coeffs[j];
        let s = (l + rho).powi(-2);
        a1 += (s - 1.0 / (l * l)) * v[j];
        a2 += s * b * b;
    }
    (a1, a2)
}

/// Smallest `n` with `n^{-1} |A_1| < rho^2 A_2`, beyond which the hybrid
/// oracle strictly dominates. `None` when `A_2 = 0`.
pub fn domination_threshold(model: &PopulationModel, rho: f64) -> Result<Option<usize>> {
    check(rho, 1)?;
    let (a1, a2) = gap_components(model, rho);
    let bias_gain = rho * rho * a2;
    if bias_gain <= 0.0 {
        return Ok(None);
    }
    if a1 >= 0.0 {
        return Ok(Some(1));
    }
    let n = (a1.abs() / bias_gain).floor() as usize + 1;
    Ok(Some(n.max(1)))
}
