//! Monte-Carlo MSE curves over the ridge parameter for Tikhonov (`r = 0`)
//! and the hybrid estimator at each block size.

use fda_hybrid::simgen::draw_replication;
use fda_hybrid::{empirical_spectrum, fit, mse_against_truth, Method, Regularizer};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{beta_label, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::study::{with_pool, MAX_FAILURE_RATE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: String,
    pub alpha: f64,
    pub method: Method,
    pub r: usize,
    pub rho: f64,
    pub mean_mse: f64,
    pub mc_se: f64,
    /// Minimum of this `(beta, alpha, r)` curve.
    pub curve_min: bool,
    /// Minimum over every curve of this `(beta, alpha)`.
    pub global_min: bool,
}

pub const SWEEP_COLUMNS: [&str; 9] = [
    "beta", "alpha", "method", "r", "rho", "mean_mse", "mc_se", "curve_min", "global_min",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Smallest mean MSE among rows matching `keep`.
    pub fn min_mse(&self, keep: impl Fn(&SweepRow) -> bool) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| keep(r))
            .map(|r| r.mean_mse)
            .min_by(f64::total_cmp)
    }

    /// `min_rho MSE_TR / min_{r >= 1, rho} MSE_HR` for one design.
    pub fn tikhonov_to_hybrid_ratio(&self, beta: &str, alpha: f64) -> Option<f64> {
        let same = |r: &SweepRow| r.beta == beta && r.alpha == alpha;
        let tr = self.min_mse(|r| same(r) && r.r == 0)?;
        let hr = self.min_mse(|r| same(r) && r.r > 0)?;
        Some(tr / hr)
    }
}

/// `rho_grid` is absolute. Every replication contributes to every grid point.
pub fn run_rho_sweep(
    cfg: &ExperimentConfig,
    r_values: &[usize],
    rho_grid: &[f64],
    workers: usize,
) -> Result<SweepTable> {
    cfg.validate()?;
    if r_values.is_empty() || rho_grid.is_empty() {
        return Err(BenchError::Config("sweep needs at least one r and one rho".into()));
    }
    if rho_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(BenchError::Config("sweep rho values must be positive".into()));
    }
    let regs: Vec<Regularizer> = r_values
        .iter()
        .flat_map(|&r| {
            rho_grid.iter().map(move |&rho| {
                if r == 0 {
                    Regularizer::Tikhonov { rho }
                } else {
                    Regularizer::Hybrid { r, rho }
                }
            })
        })
        .collect();

    let mut table = SweepTable::default();
    for design in cfg.designs() {
        let reps = cfg.replications as u64;
        let per_rep: Vec<Option<Vec<f64>>> = with_pool(workers, || {
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let sim = draw_replication(&design, rep).ok()?;
                    let spec = empirical_spectrum(&sim.data).ok()?;
                    regs.iter()
                        .map(|&reg| mse_against_truth(&fit(&spec, reg).ok()?, &sim.beta_true).ok())
                        .collect()
                })
                .collect()
        })?;
        let ok: Vec<&Vec<f64>> = per_rep.iter().flatten().collect();
        let failed = per_rep.len() - ok.len();
        if failed as f64 > MAX_FAILURE_RATE * cfg.replications as f64 {
            return Err(BenchError::Run(format!(
                "rho sweep: {failed} of {reps} replications failed"
            )));
        }
        let cnt = ok.len() as f64;
        let start = table.rows.len();
        for (j, reg) in regs.iter().enumerate() {
            let mean = ok.iter().map(|v| v[j]).sum::<f64>() / cnt;
            let var = if ok.len() > 1 {
                ok.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (cnt - 1.0)
            } else {
                0.0
            };
            table.rows.push(SweepRow {
                beta: beta_label(&design.beta_choice).to_string(),
                alpha: design.alpha_decay,
                method: reg.method(),
                r: reg.r(),
                rho: reg.rho().unwrap_or(0.0),
                mean_mse: mean,
                mc_se: (var / cnt).sqrt(),
                curve_min: false,
                global_min: false,
            });
        }
        mark_minima(&mut table.rows[start..]);
    }
    Ok(table)
}

fn argmin(rows: &[SweepRow], idx: impl Iterator<Item = usize>) -> Option<usize> {
    idx.fold(None, |best: Option<usize>, i| match best {
        Some(b) if rows[b].mean_mse <= rows[i].mean_mse => Some(b),
        _ => Some(i),
    })
}

fn mark_minima(rows: &mut [SweepRow]) {
    let mut rs: Vec<usize> = rows.iter().map(|r| r.r).collect();
    rs.dedup();
    for r in rs {
        if let Some(i) = argmin(rows, (0..rows.len()).filter(|&i| rows[i].r == r)) {
            rows[i].curve_min = true;
        }
    }
    if let Some(i) = argmin(rows, 0..rows.len()) {
        rows[i].global_min = true;
    }
}
