//! Tuning-parameter choice for one dataset under a selection mode.

use fda_hybrid::selection::{double_cv, gcv_rho, gcv_truncation, kfold_cv, SelectionResult, TuningGrid};
use fda_hybrid::{empirical_spectrum, fit, CovSpectrum, FunctionalDataset, Method, Regularizer, SlopeEstimate};

use crate::config::{SelectionMode, TuningConfig};
use crate::error::{BenchError, Result};

#[derive(Debug, Clone)]
pub struct Fitted {
    pub estimate: SlopeEstimate,
    pub regularizer: Regularizer,
}

/// `rho_values` scaled by `lead`.
pub fn rho_grid(tuning: &TuningConfig, lead: f64) -> Vec<f64> {
    tuning.rho_values.iter().map(|r| r * lead).collect()
}

/// Candidate filters searched for `method`.
pub fn candidates(method: Method, tuning: &TuningConfig, lead: f64) -> Vec<Regularizer> {
    let rhos = rho_grid(tuning, lead);
    match method {
        Method::SpectralTruncation => tuning
            .st_r_values
            .iter()
            .map(|&r| Regularizer::Truncation { r })
            .collect(),
        Method::Tikhonov => rhos.iter().map(|&rho| Regularizer::Tikhonov { rho }).collect(),
        _ => tuning
            .hr_r_values
            .iter()
            .flat_map(|&r| rhos.iter().map(move |&rho| Regularizer::Hybrid { r, rho }))
            .collect(),
    }
}

fn fixed(method: Method, tuning: &TuningConfig) -> Regularizer {
    match method {
        Method::SpectralTruncation => Regularizer::Truncation { r: tuning.fixed_r },
        Method::Tikhonov => Regularizer::Tikhonov { rho: tuning.fixed_rho },
        _ => Regularizer::Hybrid {
            r: tuning.fixed_r,
            rho: tuning.fixed_rho,
        },
    }
}

/// Chooses the tuning parameters on `data` and refits on all of it.
///
/// `lead` scales the ridge grid; `None` uses the leading empirical
/// eigenvalue. ST and TR have a single tuning axis, so `double_cv` is plain
/// K-fold for them. GCV for HR searches the joint `(r, rho)` grid.
pub fn select_and_fit(
    data: &FunctionalDataset,
    method: Method,
    mode: SelectionMode,
    tuning: &TuningConfig,
    lead: Option<f64>,
    fold_seed: u64,
) -> Result<Fitted> {
    let spec = empirical_spectrum(data)?;
    let lead = lead.unwrap_or_else(|| spec.eigvals().first().copied().unwrap_or(1.0));
    let reg = match mode {
        SelectionMode::Fixed => fixed(method, tuning),
        SelectionMode::Gcv => gcv(data, &spec, method, tuning, lead)?.regularizer(),
        SelectionMode::Kfold | SelectionMode::DoubleCv => {
            let k = tuning.folds.min(data.n());
            if method == Method::Hybrid && mode == SelectionMode::DoubleCv {
                let r_max = tuning.hr_r_values.iter().copied().max().unwrap_or(0);
                double_cv(data, r_max, &rho_grid(tuning, lead), k, fold_seed)?.regularizer()
            } else {
                let grid = TuningGrid {
                    r_values: if method == Method::SpectralTruncation {
                        tuning.st_r_values.clone()
                    } else {
                        tuning.hr_r_values.clone()
                    },
                    rho_values: rho_grid(tuning, lead),
                };
                kfold_cv(data, method, &grid, k, fold_seed)?.regularizer()
            }
        }
        SelectionMode::OracleBest => {
            return Err(BenchError::Config(
                "oracle_best needs the true slope and only runs inside a simulation study".into(),
            ))
        }
    };
    Ok(Fitted {
        estimate: fit(&spec, reg)?,
        regularizer: reg,
    })
}

fn gcv(
    data: &FunctionalDataset,
    spec: &CovSpectrum,
    method: Method,
    tuning: &TuningConfig,
    lead: f64,
) -> Result<SelectionResult> {
    let rhos = rho_grid(tuning, lead);
    Ok(match method {
        Method::SpectralTruncation => gcv_truncation(data, spec, &tuning.st_r_values)?,
        Method::Tikhonov => gcv_rho(data, spec, 0, &rhos)?,
        _ => {
            let mut best: Option<SelectionResult> = None;
            for &r in &tuning.hr_r_values {
                // block sizes beyond the positive rank cannot be fitted
                let Ok(sel) = gcv_rho(data, spec, r, &rhos) else {
                    continue;
                };
                if best.as_ref().is_none_or(|b| sel.best_score() < b.best_score()) {
                    best = Some(sel);
                }
            }
            best.ok_or_else(|| BenchError::Run("no admissible hybrid block size".into()))?
        }
    })
}
