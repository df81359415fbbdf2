//! Tuning-parameter selection: condition-index choice of `r`, generalised
//! cross-validation for `rho`, K-fold and double cross-validation.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fit, Method, Regularizer};
use crate::fda::FunctionalDataset;
use crate::spectrum::{empirical_spectrum, CovSpectrum};

/// Rule-of-thumb bound on the condition number of a well-posed block.
pub const DEFAULT_CONDITION_BOUND: f64 = 30.0;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_RHO_POINTS: usize = 40;

/// Largest `j` with `(lambda_1 / lambda_j)^{1/2} <= bound` over the
/// positive entries of a nonincreasing eigenvalue sequence.
pub fn condition_rank(eigvals: &[f64], bound: f64) -> Result<usize> {
    if !(bound >= 1.0) {
        return Err(Error::Domain(format!("condition bound must be >= 1, got {bound}")));
    }
    let lead = match eigvals.first() {
        Some(&l) if l > 0.0 => l,
        _ => {
            return Err(Error::Rank {
                requested: 1,
                available: 0,
            })
        }
    };
    // relative slack so that exact ties with the bound survive rounding
    let limit = bound * (1.0 + 1e-12);
    let pos = eigvals.iter().take_while(|&&l| l > 0.0).count();
    Ok(eigvals[..pos]
        .iter()
        .rposition(|&l| (lead / l).sqrt() <= limit)
        .map_or(0, |j| j + 1))
}

pub fn select_r_condition(spec: &CovSpectrum, bound: f64) -> Result<usize> {
    condition_rank(&spec.eigvals()[..spec.positive_rank()], bound)
}

/// `k` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && k >= 1);
    if k == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp())
        .collect()
}

/// 40 log-spaced points from `1e-6 * lambda_1` to `10 * lambda_1`.
pub fn default_rho_grid(lambda1: f64) -> Vec<f64> {
    log_grid(1e-6 * lambda1, 10.0 * lambda1, DEFAULT_RHO_POINTS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionPoint {
    pub r: usize,
    pub rho: Option<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: Method,
    pub r: usize,
    pub rho: Option<f64>,
    pub criterion_surface: Vec<CriterionPoint>,
    pub df_at_optimum: f64,
}

impl SelectionResult {
    pub fn regularizer(&self) -> Regularizer {
        match (self.method, self.rho) {
            (Method::SpectralTruncation, _) => Regularizer::Truncation { r: self.r },
            (Method::Tikhonov, Some(rho)) => Regularizer::Tikhonov { rho },
            (_, Some(rho)) => Regularizer::Hybrid { r: self.r, rho },
            (_, None) => Regularizer::Truncation { r: self.r },
        }
    }

    pub fn best_score(&self) -> f64 {
        self.criterion_surface
            .iter()
            .find(|p| p.r == self.r && p.rho == self.rho)
            .map_or(f64::INFINITY, |p| p.score)
    }
}

/// Argmin with ties broken toward smaller `r`, then larger `rho`.
fn argmin(points: &[CriterionPoint]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if !p.score.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let q = &points[b];
                if p.score != q.score {
                    p.score < q.score
                } else if p.r != q.r {
                    p.r < q.r
                } else {
                    p.rho.unwrap_or(0.0) > q.rho.unwrap_or(0.0)
                }
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

fn finish(
    method: Method,
    candidates: &[Regularizer],
    surface: Vec<CriterionPoint>,
    full: &CovSpectrum,
) -> Result<SelectionResult> {
    let i = argmin(&surface)
        .ok_or_else(|| Error::Selection("every candidate scored +inf".into()))?;
    let reg = candidates[i];
    Ok(SelectionResult {
        method,
        r: reg.r(),
        rho: reg.rho(),
        df_at_optimum: reg.df(&full.eigvals()[..full.positive_rank()]),
        criterion_surface: surface,
    })
}

/// In-sample residual sum of squares of a fitted filter.
fn rss(data: &FunctionalDataset, spec: &CovSpectrum, scores: &DMatrix<f64>, reg: &Regularizer) -> f64 {
    let pred = filtered_predictions(spec, scores, reg);
    pred.iter()
        .zip(data.y())
        .map(|(p, y)| (y - p).powi(2))
        .sum()
}

/// Predictions `y_bar + <x_i - X_bar, beta_hat>_m` through the spectral
/// representation of `beta_hat`, without forming the curve.
fn filtered_predictions(
    spec: &CovSpectrum,
    scores: &DMatrix<f64>,
    reg: &Regularizer,
) -> Vec<f64> {
    let pos = spec.positive_rank();
    let coef: Vec<f64> = (0..pos)
        .map(|j| reg.weight(j, spec.eigvals()[j]) * spec.cross_coeffs()[j])
        .collect();
    (0..scores.nrows())
        .map(|i| {
            let lin: f64 = coef.iter().enumerate().map(|(j, c)| c * scores[(i, j)]).sum();
            spec.y_mean() + lin
        })
        .collect()
}

/// Generalised cross-validation of `rho` for the hybrid filter at fixed `r`
/// (`r = 0` is plain Tikhonov):
/// `GCV(rho) = n RSS(rho) / (n - df(rho))^2`, scored `+inf` when `df >= n`.
pub fn gcv_rho(
    data: &FunctionalDataset,
    spec: &CovSpectrum,
    r: usize,
    rho_grid: &[f64],
) -> Result<SelectionResult> {
    if rho_grid.is_empty() {
        return Err(Error::Selection("empty rho grid".into()));
    }
    let method = if r == 0 { Method::Tikhonov } else { Method::Hybrid };
    let candidates: Vec<Regularizer> = rho_grid
        .iter()
        .map(|&rho| {
            if r == 0 {
                Regularizer::Tikhonov { rho }
            } else {
                Regularizer::Hybrid { r, rho }
            }
        })
        .collect();
    gcv_over(data, spec, method, &candidates)
}

/// GCV over the truncation level, `df = 1 + r`.
pub fn gcv_truncation(
    data: &FunctionalDataset,
    spec: &CovSpectrum,
    r_grid: &[usize],
) -> Result<SelectionResult> {
    let candidates: Vec<Regularizer> = r_grid.iter().map(|&r| Regularizer::Truncation { r }).collect();
    gcv_over(data, spec, Method::SpectralTruncation, &candidates)
}

fn gcv_over(
    data: &FunctionalDataset,
    spec: &CovSpectrum,
    method: Method,
    candidates: &[Regularizer],
) -> Result<SelectionResult> {
    let n = data.n() as f64;
    let scores = spec.scores(data.x())?;
    let pos = &spec.eigvals()[..spec.positive_rank()];
    let surface = candidates
        .iter()
        .map(|reg| {
            let score = if reg.validate(spec.positive_rank()).is_err() {
                f64::INFINITY
            } else {
                let df = reg.df(pos);
                if df >= n {
                    f64::INFINITY
                } else {
                    n * rss(data, spec, &scores, reg) / (n - df).powi(2)
                }
            };
            CriterionPoint {
                r: reg.r(),
                rho: reg.rho(),
                score,
            }
        })
        .collect();
    finish(method, candidates, surface, spec)
}

/// Seeded partition of `0..n` into `k` folds of size `floor(n/k)` or `ceil(n/k)`.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::Fold(format!("need 2 <= K <= n, got K = {k}, n = {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Parameter grid; the method decides which axes are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub r_values: Vec<usize>,
    pub rho_values: Vec<f64>,
}

impl TuningGrid {
    pub fn candidates(&self, method: Method) -> Result<Vec<Regularizer>> {
        let c: Vec<Regularizer> = match method {
            Method::SpectralTruncation => self
                .r_values
                .iter()
                .map(|&r| Regularizer::Truncation { r })
                .collect(),
            Method::Tikhonov => self
                .rho_values
                .iter()
                .map(|&rho| Regularizer::Tikhonov { rho })
                .collect(),
            Method::Hybrid => self
                .r_values
                .iter()
                .flat_map(|&r| {
                    self.rho_values
                        .iter()
                        .map(move |&rho| Regularizer::Hybrid { r, rho })
                })
                .collect(),
            other => {
                return Err(Error::Domain(format!(
                    "{other} cannot be tuned by cross-validation"
                )))
            }
        };
        if c.is_empty() {
            return Err(Error::Selection(format!("empty tuning grid for {method}")));
        }
        Ok(c)
    }
}

/// K-fold cross-validation with seeded folds. Scores are the pooled mean
/// squared prediction error over held-out observations; eigenfunctions are
/// refit on each training part.
pub fn kfold_cv(
    data: &FunctionalDataset,
    method: Method,
    grid: &TuningGrid,
    k: usize,
    seed: u64,
) -> Result<SelectionResult> {
    let folds = fold_assignment(data.n(), k, seed)?;
    cv_with_folds(data, method, &grid.candidates(method)?, &folds)
}

/// Cross-validation over explicit folds (each a list of held-out indices).
pub fn cv_with_folds(
    data: &FunctionalDataset,
    method: Method,
    candidates: &[Regularizer],
    folds: &[Vec<usize>],
) -> Result<SelectionResult> {
    let n = data.n();
    let mut held = vec![false; n];
    for f in folds {
        if f.is_empty() {
            return Err(Error::Fold("empty fold".into()));
        }
        for &i in f {
            if i >= n || std::mem::replace(&mut held[i], true) {
                return Err(Error::Fold(format!("index {i} invalid or held out twice")));
            }
        }
    }
    if held.iter().any(|h| !h) {
        return Err(Error::Fold("folds do not cover every observation".into()));
    }

    let mut sse = vec![0.0; candidates.len()];
    let mut held_total = 0usize;
    for fold in folds {
        let mut is_test = vec![false; n];
        fold.iter().for_each(|&i| is_test[i] = true);
        let train: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
        if train.len() < 2 {
            return Err(Error::Fold(format!(
                "training part has {} observation(s); need at least 2",
                train.len()
            )));
        }
        let train_data = data.subset(&train)?;
        let test_x = DMatrix::from_fn(fold.len(), data.m(), |a, p| data.x()[(fold[a], p)]);
        let test_y: Vec<f64> = fold.iter().map(|&i| data.y()[i]).collect();
        let spec = empirical_spectrum(&train_data)?;
        let scores = spec.scores(&test_x)?;
        for (s, reg) in sse.iter_mut().zip(candidates) {
            if reg.validate(spec.positive_rank()).is_err() {
                *s = f64::INFINITY;
                continue;
            }
            let pred = filtered_predictions(&spec, &scores, reg);
            *s += pred
                .iter()
                .zip(&test_y)
                .map(|(p, y)| (y - p).powi(2))
                .sum::<f64>();
        }
        held_total += fold.len();
    }
    let surface = candidates
        .iter()
        .zip(&sse)
        .map(|(reg, s)| CriterionPoint {
            r: reg.r(),
            rho: reg.rho(),
            score: s / held_total as f64,
        })
        .collect();
    let full = empirical_spectrum(data)?;
    finish(method, candidates, surface, &full)
}

/// Joint K-fold search over `r in 0..=r_max` and `rho_grid`; `r = 0` is the
/// Tikhonov estimator.
pub fn double_cv(
    data: &FunctionalDataset,
    r_max: usize,
    rho_grid: &[f64],
    k: usize,
    seed: u64,
) -> Result<SelectionResult> {
    let grid = TuningGrid {
        r_values: (0..=r_max).collect(),
        rho_values: rho_grid.to_vec(),
    };
    let folds = fold_assignment(data.n(), k, seed)?;
    let mut sel = cv_with_folds(data, Method::Hybrid, &grid.candidates(Method::Hybrid)?, &folds)?;
    if sel.r == 0 {
        sel.method = Method::Tikhonov;
    }
    Ok(sel)
}

/// Convenience: fit the selected estimator on the full data.
pub fn refit(data: &FunctionalDataset, sel: &SelectionResult) -> Result<crate::estimators::SlopeEstimate> {
    let spec = empirical_spectrum(data)?;
    fit(&spec, sel.regularizer())
}
