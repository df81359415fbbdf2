//! Spectral truncation, Tikhonov and hybrid slope estimators.
//!
//! Every estimator is a spectral filter applied to the cross-covariance
//! `C_hat`:
//!
//! ```text
//! beta_hat = sum_j w_j <C_hat, phi_j>_m phi_j + w_res * (C_hat - P C_hat)
//! ```
//!
//! where `P` projects onto the positive eigenfunctions. The hybrid filter
//! uses `w_j = 1/lambda_j` on the leading `r` directions and
//! `w_j = 1/(lambda_j + rho)` elsewhere, so it reduces to Tikhonov at
//! `r = 0` and to spectral truncation as `rho -> 0`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fda::{center, Curve, FunctionalDataset, Grid};
use crate::spectrum::CovSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ST")]
    SpectralTruncation,
    #[serde(rename = "TR")]
    Tikhonov,
    #[serde(rename = "HR")]
    Hybrid,
    #[serde(rename = "HR_oracle")]
    HybridOracle,
    #[serde(rename = "TR_oracle")]
    TikhonovOracle,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::SpectralTruncation => "ST",
            Method::Tikhonov => "TR",
            Method::Hybrid => "HR",
            Method::HybridOracle => "HR_oracle",
            Method::TikhonovOracle => "TR_oracle",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ST" | "st" => Ok(Method::SpectralTruncation),
            "TR" | "tr" => Ok(Method::Tikhonov),
            "HR" | "hr" => Ok(Method::Hybrid),
            "HR_oracle" => Ok(Method::HybridOracle),
            "TR_oracle" => Ok(Method::TikhonovOracle),
            other => Err(Error::Domain(format!("unknown method '{other}'"))),
        }
    }
}

/// Tuning of one spectral filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    Truncation { r: usize },
    Tikhonov { rho: f64 },
    Hybrid { r: usize, rho: f64 },
}

impl Regularizer {
    pub fn method(&self) -> Method {
        match self {
            Regularizer::Truncation { .. } => Method::SpectralTruncation,
            Regularizer::Tikhonov { .. } => Method::Tikhonov,
            Regularizer::Hybrid { .. } => Method::Hybrid,
        }
    }

    /// Size of the unpenalised leading block.
    pub fn r(&self) -> usize {
        match *self {
            Regularizer::Truncation { r } | Regularizer::Hybrid { r, .. } => r,
            Regularizer::Tikhonov { .. } => 0,
        }
    }

    pub fn rho(&self) -> Option<f64> {
        match *self {
            Regularizer::Truncation { .. } => None,
            Regularizer::Tikhonov { rho } | Regularizer::Hybrid { rho, .. } => Some(rho),
        }
    }

    /// Checks the tuning against a spectrum with `positive_rank` positive eigenvalues.
    pub fn validate(&self, positive_rank: usize) -> Result<()> {
        if let Some(rho) = self.rho() {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::Domain(format!("rho must be positive, got {rho}")));
            }
        }
        let r = self.r();
        if matches!(self, Regularizer::Truncation { .. }) && r == 0 {
            return Err(Error::Domain("spectral truncation needs r >= 1".into()));
        }
        if r > positive_rank {
            return Err(Error::Rank {
                requested: r,
                available: positive_rank,
            });
        }
        Ok(())
    }

    /// Filter weight for the `j`-th (0-based) positive eigenvalue.
    #[inline]
    pub fn weight(&self, j: usize, lambda: f64) -> f64 {
        match *self {
            Regularizer::Truncation { r } => {
                if j < r {
                    1.0 / lambda
                } else {
                    0.0
                }
            }
            Regularizer::Tikhonov { rho } => 1.0 / (lambda + rho),
            Regularizer::Hybrid { r, rho } => {
                if j < r {
                    1.0 / lambda
                } else {
                    1.0 / (lambda + rho)
                }
            }
        }
    }

    /// Effective degrees of freedom: intercept, unpenalised block and ridge trace.
    pub fn df(&self, positive_eigvals: &[f64]) -> f64 {
        let r = self.r().min(positive_eigvals.len());
        let ridge: f64 = match self.rho() {
            Some(rho) if !matches!(self, Regularizer::Truncation { .. }) => positive_eigvals[r..]
                .iter()
                .map(|l| l / (l + rho))
                .sum(),
            _ => 0.0,
        };
        1.0 + r as f64 + ridge
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub grid: Grid,
    pub beta: Curve,
    pub intercept: f64,
    pub method: Method,
    pub r: Option<usize>,
    pub rho: Option<f64>,
    pub df: f64,
    /// Set when the split falls inside a run of tied eigenvalues.
    pub tied_split: bool,
}

/// Filter weights for every retained direction.
fn weights(spec: &CovSpectrum, reg: &Regularizer) -> Vec<f64> {
    let pos = spec.positive_rank();
    spec.eigvals()
        .iter()
        .enumerate()
        .map(|(j, &l)| if j < pos { reg.weight(j, l) } else { 0.0 })
        .collect()
}

fn is_tied_split(eigvals: &[f64], r: usize, positive_rank: usize) -> bool {
    if r == 0 || r >= positive_rank {
        return false;
    }
    let (a, b) = (eigvals[r - 1], eigvals[r]);
    (a - b).abs() <= 1e-10 * a.abs()
}

/// Fits any of the three data-driven estimators.
pub fn fit(spec: &CovSpectrum, reg: Regularizer) -> Result<SlopeEstimate> {
    let pos = spec.positive_rank();
    reg.validate(pos)?;
    let w = weights(spec, &reg);
    let filtered: Vec<f64> = w
        .iter()
        .zip(spec.cross_coeffs())
        .map(|(w, c)| w * c)
        .collect();
    // directions outside the positive spectrum carry no part of C_hat
    let beta = spec.eigfuns() * nalgebra::DVector::from_vec(filtered);
    let beta = Curve::from_dvector(&beta);
    if beta.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("slope estimate"));
    }
    let intercept = spec.y_mean() - spec.mean_curve().dot_m(&beta);
    Ok(SlopeEstimate {
        grid: spec.grid().clone(),
        beta,
        intercept,
        method: reg.method(),
        r: match reg {
            Regularizer::Tikhonov { .. } => None,
            _ => Some(reg.r()),
        },
        rho: reg.rho(),
        df: reg.df(&spec.eigvals()[..pos]),
        tied_split: is_tied_split(spec.eigvals(), reg.r(), pos),
    })
}

pub fn fit_spectral_truncation(spec: &CovSpectrum, r: usize) -> Result<SlopeEstimate> {
    fit(spec, Regularizer::Truncation { r })
}

pub fn fit_tikhonov(spec: &CovSpectrum, rho: f64) -> Result<SlopeEstimate> {
    fit(spec, Regularizer::Tikhonov { rho })
}

pub fn fit_hybrid(spec: &CovSpectrum, r: usize, rho: f64) -> Result<SlopeEstimate> {
    fit(spec, Regularizer::Hybrid { r, rho })
}

/// Cross-covariances of the responses with the projected regressors
/// `Y_i = P_1 X_i` and `Z_i = X_i - Y_i`, where `P_1` projects onto the
/// leading `r` empirical eigenfunctions. Returns `(C_1, C_2)`.
pub fn split_cross_covariance(
    data: &FunctionalDataset,
    spec: &CovSpectrum,
    r: usize,
) -> Result<(Curve, Curve)> {
    spec.grid().check_len(data.m())?;
    if r > spec.retained() {
        return Err(Error::Index {
            index: r,
            available: spec.retained(),
        });
    }
    let n = data.n();
    let m = data.m() as f64;
    let phi = spec.eigfuns().columns(0, r);
    // raw (uncentered) curves, projected
    let head = data.x() * phi / m; // n x r scores
    let y_proj = head * phi.transpose(); // n x m
    let z_proj = data.x() - &y_proj;

    let y_mean = data.y().iter().sum::<f64>() / n as f64;
    let cross = |mat: &DMatrix<f64>| -> Curve {
        let mut out = vec![0.0; data.m()];
        for (p, col) in mat.column_iter().enumerate() {
            let mean = col.mean();
            out[p] = col
                .iter()
                .zip(data.y())
                .map(|(x, y)| (y - y_mean) * (x - mean))
                .sum::<f64>()
                / n as f64;
        }
        Curve::from_raw(out)
    };
    Ok((cross(&y_proj), cross(&z_proj)))
}

/// How the oracle estimators center responses and curves.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Centering {
    /// Sample means, as in the data-driven estimators.
    #[default]
    Empirical,
    /// Population means supplied by the simulator.
    Known { x_mean: Curve, y_mean: f64 },
}

/// True eigenstructure split into an unpenalised head of dimension `r`
/// and a ridge-penalised tail.
#[derive(Debug, Clone)]
pub struct OracleSplit {
    grid: Grid,
    r: usize,
    eigvals: Vec<f64>,
    /// `m x J`, head first.
    eigfuns: DMatrix<f64>,
    centering: Centering,
}

impl OracleSplit {
    /// `eigvals[..r]`/`eigfuns[..r]` form the head, the rest the tail.
    /// Eigenfunctions must be orthonormal under `<.,.>_m` within `1e-6`.
    pub fn new(grid: Grid, eigvals: Vec<f64>, eigfuns: &[Curve], r: usize) -> Result<Self> {
        if eigvals.len() != eigfuns.len() {
            return Err(Error::Dimension {
                expected: eigvals.len(),
                found: eigfuns.len(),
            });
        }
        if r > eigvals.len() {
            return Err(Error::Rank {
                requested: r,
                available: eigvals.len(),
            });
        }
        if let Some(l) = eigvals.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::Domain(format!(
                "oracle eigenvalues must be positive, got {l}"
            )));
        }
        for f in eigfuns {
            grid.check_len(f.len())?;
        }
        for (a, fa) in eigfuns.iter().enumerate() {
            for (b, fb) in eigfuns.iter().enumerate().skip(a) {
                let target = if a == b { 1.0 } else { 0.0 };
                if (fa.dot_m(fb) - target).abs() > 1e-6 {
                    return Err(Error::Domain(format!(
                        "oracle eigenfunctions {a} and {b} are not orthonormal"
                    )));
                }
            }
        }
        let m = grid.len();
        let cols = DMatrix::from_fn(m, eigfuns.len(), |p, j| eigfuns[j].values()[p]);
        Ok(Self {
            grid,
            r,
            eigvals,
            eigfuns: cols,
            centering: Centering::Empirical,
        })
    }

    /// Uses the positive part of an empirical spectrum as the "truth".
    pub fn from_spectrum(spec: &CovSpectrum, r: usize) -> Result<Self> {
        let pos = spec.positive_rank();
        let funs: Vec<Curve> = (0..pos).map(|j| spec.eigfun(j)).collect::<Result<_>>()?;
        Self::new(spec.grid().clone(), spec.eigvals()[..pos].to_vec(), &funs, r)
    }

    pub fn with_centering(mut self, centering: Centering) -> Self {
        self.centering = centering;
        self
    }

    pub fn projector_dim(&self) -> usize {
        self.r
    }

    pub fn head_eigvals(&self) -> &[f64] {
        &self.eigvals[..self.r]
    }

    pub fn tail_eigvals(&self) -> &[f64] {
        &self.eigvals[self.r..]
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigfun(&self, j: usize) -> Curve {
        Curve::from_raw(self.eigfuns.column(j).iter().copied().collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn centering(&self) -> &Centering {
        &self.centering
    }
}

fn oracle_fit(
    data: &FunctionalDataset,
    split: &OracleSplit,
    rho: f64,
    hybrid: bool,
) -> Result<SlopeEstimate> {
    split.grid.check_len(data.m())?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    let n = data.n() as f64;
    let m = data.m();
    let (y_mean, x_mean) = match &split.centering {
        Centering::Empirical => {
            let (yb, xb, _) = center(data)?;
            (yb, xb)
        }
        Centering::Known { x_mean, y_mean } => {
            split.grid.check_len(x_mean.len())?;
            (*y_mean, x_mean.clone())
        }
    };
    let mut cross = vec![0.0; m];
    for (i, row) in data.x().row_iter().enumerate() {
        let yc = data.y()[i] - y_mean;
        for (p, c) in cross.iter_mut().enumerate() {
            *c += yc * (row[p] - x_mean.values()[p]);
        }
    }
    cross.iter_mut().for_each(|c| *c /= n);

    let mut residual = cross.clone();
    let mut beta = vec![0.0; m];
    for (j, &lam) in split.eigvals.iter().enumerate() {
        let phi = split.eigfuns.column(j);
        let coef = phi.iter().zip(&cross).map(|(a, b)| a * b).sum::<f64>() / m as f64;
        let w = if hybrid && j < split.r {
            1.0 / lam
        } else {
            1.0 / (lam + rho)
        };
        for p in 0..m {
            beta[p] += w * coef * phi[p];
            residual[p] -= coef * phi[p];
        }
    }
    for (b, r) in beta.iter_mut().zip(&residual) {
        *b += r / rho;
    }
    let beta = Curve::new(beta)?;
    let intercept = y_mean - x_mean.dot_m(&beta);
    let r = if hybrid { split.r } else { 0 };
    let df = 1.0
        + r as f64
        + split.eigvals[r..]
            .iter()
            .map(|l| l / (l + rho))
            .sum::<f64>();
    Ok(SlopeEstimate {
        grid: split.grid.clone(),
        beta,
        intercept,
        method: if hybrid {
            Method::HybridOracle
        } else {
            Method::TikhonovOracle
        },
        r: hybrid.then_some(split.r),
        rho: Some(rho),
        df,
        tied_split: hybrid && is_tied_split(&split.eigvals, split.r, split.eigvals.len()),
    })
}

/// Hybrid estimator built from the true eigenstructure.
pub fn fit_hybrid_oracle(
    data: &FunctionalDataset,
    split: &OracleSplit,
    rho: f64,
) -> Result<SlopeEstimate> {
    oracle_fit(data, split, rho, true)
}

/// Tikhonov estimator with the population covariance in place of `K_hat`.
pub fn fit_tikhonov_oracle(
    data: &FunctionalDataset,
    split: &OracleSplit,
    rho: f64,
) -> Result<SlopeEstimate> {
    oracle_fit(data, split, rho, false)
}

/// `alpha_hat + <x, beta_hat>_m`.
pub fn predict(est: &SlopeEstimate, x: &Curve) -> Result<f64> {
    est.grid.check_len(x.len())?;
    Ok(est.intercept + est.beta.dot_m(x))
}

/// Squared discrete distance `m^{-1} sum_p (beta_hat(t_p) - beta(t_p))^2`.
pub fn mse_against_truth(est: &SlopeEstimate, beta_true: &Curve) -> Result<f64> {
    est.grid.check_len(beta_true.len())?;
    let d = est.beta.sub(beta_true);
    Ok(d.dot_m(&d))
}
