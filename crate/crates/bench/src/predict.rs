//! Prediction error over repeated random train/test splits of one dataset.

use fda_hybrid::{predict, FunctionalDataset, Method};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SelectionMode};
use crate::error::{BenchError, Result};
use crate::study::with_pool;
use crate::tuning::select_and_fit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub method: Method,
    pub selection: SelectionMode,
    pub mean_error: f64,
    pub se: f64,
    pub splits: usize,
}

pub const PREDICTION_COLUMNS: [&str; 5] = ["method", "selection", "mean_error", "se", "splits"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionTable {
    pub rows: Vec<PredictionRow>,
}

/// Training indices of split `s`, sorted; the rest form the test part.
pub fn split_indices(n: usize, train_frac: f64, seed: u64, s: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let n_train = ((train_frac * n as f64).round() as usize).clamp(2, n - 1);
    let (a, b) = idx.split_at(n_train);
    let (mut train, mut test) = (a.to_vec(), b.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Tuning is chosen on each training part only; the error is the mean
/// squared prediction error on the matching test part.
pub fn run_split_prediction(
    data: &FunctionalDataset,
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<PredictionTable> {
    cfg.validate()?;
    if data.n() < 3 {
        return Err(BenchError::Config("split prediction needs at least 3 observations".into()));
    }
    if cfg.selection.contains(&SelectionMode::OracleBest) {
        return Err(BenchError::Config("oracle_best is unavailable for observed data".into()));
    }
    let seed = cfg.design.seed;
    let mut table = PredictionTable::default();
    for &method in &cfg.methods {
        for &mode in &cfg.selection {
            let errors: Vec<Option<f64>> = with_pool(workers, || {
                (0..cfg.splits as u64)
                    .into_par_iter()
                    .map(|s| {
                        let (train, test) = split_indices(data.n(), cfg.train_frac, seed, s);
                        let train_data = data.subset(&train).ok()?;
                        let fitted =
                            select_and_fit(&train_data, method, mode, &cfg.tuning, None, seed ^ s).ok()?;
                        let sse: f64 = test
                            .iter()
                            .map(|&i| {
                                predict(&fitted.estimate, &data.curve(i)).map(|p| (data.y()[i] - p).powi(2))
                            })
                            .sum::<fda_hybrid::Result<f64>>()
                            .ok()?;
                        Some(sse / test.len() as f64)
                    })
                    .collect()
            })?;
            let ok: Vec<f64> = errors.iter().flatten().copied().collect();
            let failed = errors.len() - ok.len();
            if ok.is_empty() || failed as f64 > crate::study::MAX_FAILURE_RATE * errors.len() as f64 {
                return Err(BenchError::Run(format!(
                    "{method}/{}: {failed} of {} splits failed",
                    mode.label(),
                    errors.len()
                )));
            }
            let k = ok.len() as f64;
            let mean = ok.iter().sum::<f64>() / k;
            let se = if ok.len() > 1 {
                (ok.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            } else {
                0.0
            };
            table.rows.push(PredictionRow {
                method,
                selection: mode,
                mean_error: mean,
                se,
                splits: ok.len(),
            });
        }
    }
    Ok(table)
}
