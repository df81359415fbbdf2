//! Monte-Carlo MSE studies over simulated replications.
//!
//! Replications run on a rayon pool but are reduced in replication order,
//! so every number depends on the config alone and not on the worker count.

use fda_hybrid::simgen::{draw_replication, PopulationTruth, Replication, SimDesign};
use fda_hybrid::{empirical_spectrum, fit, mse_against_truth, Method, Regularizer};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{beta_label, ExperimentConfig, SelectionMode};
use crate::error::{BenchError, Result};
use crate::tuning::{candidates, select_and_fit};

/// Largest tolerated share of failed replications per table cell.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// One table cell. Inapplicable `mean_r` / `mean_rho` are reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub beta: String,
    pub alpha: f64,
    pub method: Method,
    pub selection: SelectionMode,
    pub mean_mse: f64,
    pub mc_se: f64,
    pub mean_r: f64,
    pub mean_rho: f64,
}

pub const MSE_COLUMNS: [&str; 8] = [
    "beta", "alpha", "method", "selection", "mean_mse", "mc_se", "mean_r", "mean_rho",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub beta: String,
    pub alpha: f64,
    pub method: Method,
    pub selection: SelectionMode,
    pub replication: u64,
    pub mse: f64,
    pub r: f64,
    pub rho: f64,
}

pub const REPLICATION_COLUMNS: [&str; 8] = [
    "beta", "alpha", "method", "selection", "replication", "mse", "r", "rho",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MseTable {
    pub rows: Vec<MseRow>,
}

impl MseTable {
    pub fn get(&self, beta: &str, alpha: f64, method: Method, selection: SelectionMode) -> Option<&MseRow> {
        self.rows.iter().find(|r| {
            r.beta == beta && r.alpha == alpha && r.method == method && r.selection == selection
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureCount {
    pub beta: String,
    pub alpha: f64,
    pub method: Method,
    pub selection: SelectionMode,
    pub failed: usize,
}

#[derive(Debug, Clone, Default)]
pub struct StudyOutput {
    pub table: MseTable,
    pub replications: Vec<ReplicationRecord>,
    pub failures: Vec<FailureCount>,
}

#[derive(Debug, Clone)]
enum Outcome {
    Selected { mse: f64, r: f64, rho: f64 },
    /// MSE of every oracle candidate, in candidate order.
    Grid(Vec<f64>),
    Failed,
}

fn reg_params(reg: &Regularizer) -> (f64, f64) {
    (reg.r() as f64, reg.rho().unwrap_or(0.0))
}

pub(crate) fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Run(e.to_string()))?;
    Ok(pool.install(job))
}

fn fold_seed(design: &SimDesign, rep: u64) -> u64 {
    design.seed ^ rep.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn one_replication(
    cfg: &ExperimentConfig,
    design: &SimDesign,
    cells: &[(Method, SelectionMode)],
    rep: u64,
) -> Vec<Outcome> {
    let Ok(sim) = draw_replication(design, rep) else {
        return vec![Outcome::Failed; cells.len()];
    };
    let lead = sim.truth.eigvals().first().copied().unwrap_or(1.0);
    cells
        .iter()
        .map(|&(method, mode)| {
            if mode == SelectionMode::OracleBest {
                oracle_grid(cfg, &sim, method, lead).map_or(Outcome::Failed, Outcome::Grid)
            } else {
                select_and_fit(&sim.data, method, mode, &cfg.tuning, Some(lead), fold_seed(design, rep))
                    .ok()
                    .and_then(|f| {
                        let mse = mse_against_truth(&f.estimate, &sim.beta_true).ok()?;
                        let (r, rho) = reg_params(&f.regularizer);
                        Some(Outcome::Selected { mse, r, rho })
                    })
                    .unwrap_or(Outcome::Failed)
            }
        })
        .collect()
}

fn oracle_grid(cfg: &ExperimentConfig, sim: &Replication, method: Method, lead: f64) -> Option<Vec<f64>> {
    let spec = empirical_spectrum(&sim.data).ok()?;
    candidates(method, &cfg.tuning, lead)
        .into_iter()
        .map(|reg| {
            let est = fit(&spec, reg).ok()?;
            mse_against_truth(&est, &sim.beta_true).ok()
        })
        .collect()
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every `(beta, alpha)` design of the config with `workers` threads.
pub fn run_mc_study(cfg: &ExperimentConfig, workers: usize) -> Result<StudyOutput> {
    cfg.validate()?;
    let cells: Vec<(Method, SelectionMode)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.selection.iter().map(move |&s| (m, s)))
        .collect();
    let mut out = StudyOutput::default();
    for design in cfg.designs() {
        let beta = beta_label(&design.beta_choice).to_string();
        let alpha = design.alpha_decay;
        let reps = cfg.replications as u64;
        let outcomes: Vec<Vec<Outcome>> = with_pool(workers, || {
            (0..reps)
                .into_par_iter()
                .map(|rep| one_replication(cfg, &design, &cells, rep))
                .collect()
        })?;

        for (c, &(method, selection)) in cells.iter().enumerate() {
            let column: Vec<(u64, &Outcome)> =
                outcomes.iter().enumerate().map(|(k, o)| (k as u64, &o[c])).collect();
            let failed = column.iter().filter(|(_, o)| matches!(o, Outcome::Failed)).count();
            if failed > 0 {
                out.failures.push(FailureCount {
                    beta: beta.clone(),
                    alpha,
                    method,
                    selection,
                    failed,
                });
            }
            if failed as f64 > MAX_FAILURE_RATE * cfg.replications as f64 {
                return Err(BenchError::Run(format!(
                    "{beta} alpha={alpha} {method}/{}: {failed} of {reps} replications failed",
                    selection.label()
                )));
            }
            let ok: Vec<(u64, &Outcome)> = column
                .into_iter()
                .filter(|(_, o)| !matches!(o, Outcome::Failed))
                .collect();
            let per_rep: Vec<(u64, f64, f64, f64)> = if selection == SelectionMode::OracleBest {
                let cands = candidates(method, &cfg.tuning, 1.0);
                let grids: Vec<&Vec<f64>> = ok
                    .iter()
                    .filter_map(|(_, o)| match o {
                        Outcome::Grid(g) => Some(g),
                        _ => None,
                    })
                    .collect();
                let means: Vec<f64> = (0..cands.len())
                    .map(|j| grids.iter().map(|g| g[j]).sum::<f64>() / grids.len() as f64)
                    .collect();
                // first minimum: smaller r, then smaller rho in grid order
                let best = means
                    .iter()
                    .enumerate()
                    .fold(0, |b, (j, m)| if *m < means[b] { j } else { b });
                let lead = PopulationTruth::from_design(&design)?
                    .eigvals()
                    .first()
                    .copied()
                    .unwrap_or(1.0);
                let reg = candidates(method, &cfg.tuning, lead)[best];
                let (r, rho) = reg_params(&reg);
                ok.iter()
                    .zip(&grids)
                    .map(|((k, _), g)| (*k, g[best], r, rho))
                    .collect()
            } else {
                ok.iter()
                    .filter_map(|(k, o)| match o {
                        Outcome::Selected { mse, r, rho } => Some((*k, *mse, *r, *rho)),
                        _ => None,
                    })
                    .collect()
            };
            let mses: Vec<f64> = per_rep.iter().map(|p| p.1).collect();
            let (mean_mse, mc_se) = mean_se(&mses);
            let cnt = per_rep.len() as f64;
            out.table.rows.push(MseRow {
                beta: beta.clone(),
                alpha,
                method,
                selection,
                mean_mse,
                mc_se,
                mean_r: per_rep.iter().map(|p| p.2).sum::<f64>() / cnt,
                mean_rho: per_rep.iter().map(|p| p.3).sum::<f64>() / cnt,
            });
            out.replications.extend(per_rep.into_iter().map(|(k, mse, r, rho)| ReplicationRecord {
                beta: beta.clone(),
                alpha,
                method,
                selection,
                replication: k,
                mse,
                r,
                rho,
            }));
        }
    }
    Ok(out)
}
