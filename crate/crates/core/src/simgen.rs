//! Seeded Karhunen-Loeve simulation designs.
//!
//! Curves are `X = sum_j gamma_j Z_j phi_j` on a cosine basis with unit
//! variance scores, responses are `y_i = <X_i, beta>_m + eps_i`. Replication
//! `k` of a run draws from ChaCha8 stream `k` of the root seed, so any single
//! replication can be regenerated without the others.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analytic::{PopulationModel, ScoreDistribution};
use crate::error::{Error, Result};
use crate::estimators::{Centering, OracleSplit};
use crate::fda::{Curve, FunctionalDataset, Grid, GridKind};

/// Expansion length of the standard designs.
pub const DEFAULT_TERMS: usize = 50;

/// Basis functions whose discrete norm falls below this are aliased away by
/// the grid and dropped from the population eigenstructure.
const ALIAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    WellSpaced,
    CloselySpaced,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaChoice {
    /// All terms.
    #[default]
    Beta1,
    /// Terms 1 to 5.
    Beta2,
    /// Terms 6 onwards.
    Beta3,
    /// Explicit basis coefficients.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimDesign {
    pub alpha_decay: f64,
    pub spacing: Spacing,
    pub beta_choice: BetaChoice,
    pub n: usize,
    pub m: usize,
    pub terms: usize,
    pub noise_sd: f64,
    pub measurement_error_sd: f64,
    pub grid: GridKind,
    pub scores: ScoreDistribution,
    pub seed: u64,
}

impl Default for SimDesign {
    fn default() -> Self {
        Self {
            alpha_decay: 1.1,
            spacing: Spacing::WellSpaced,
            beta_choice: BetaChoice::Beta1,
            n: 100,
            m: 50,
            terms: DEFAULT_TERMS,
            noise_sd: 1.0,
            measurement_error_sd: 0.0,
            grid: GridKind::Midpoint,
            scores: ScoreDistribution::Uniform,
            seed: 0,
        }
    }
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_decay > 1.0 && self.alpha_decay.is_finite()) {
            return Err(Error::Domain(format!(
                "alpha must exceed 1, got {}",
                self.alpha_decay
            )));
        }
        if self.n < 2 || self.m < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: self.n.min(self.m),
            });
        }
        if self.terms == 0 {
            return Err(Error::Domain("at least one basis term is required".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Domain("noise sd must be nonnegative".into()));
        }
        if !(self.measurement_error_sd >= 0.0 && self.measurement_error_sd.is_finite()) {
            return Err(Error::Domain("measurement error sd must be nonnegative".into()));
        }
        if let BetaChoice::Custom(b) = &self.beta_choice {
            if b.len() > self.terms {
                return Err(Error::Dimension {
                    expected: self.terms,
                    found: b.len(),
                });
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("custom slope coefficients"));
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        self.grid.build(self.m)
    }
}

/// `phi_1 = 1`, `phi_j = sqrt 2 cos(j pi t)` for `j >= 2`.
pub fn kl_basis(grid: &Grid, terms: usize) -> Vec<Curve> {
    let s2 = 2f64.sqrt();
    (1..=terms)
        .map(|j| {
            if j == 1 {
                Curve::constant(grid.len(), 1.0)
            } else {
                let w = j as f64 * std::f64::consts::PI;
                Curve::from_raw(grid.points().iter().map(|t| s2 * (w * t).cos()).collect())
            }
        })
        .collect()
}

fn alt_sign(j: usize) -> f64 {
    // (-1)^{j+1}
    if j % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Score standard deviations `gamma_1, ..., gamma_J` (1-based formulas).
pub fn gamma_sequence(spacing: Spacing, alpha: f64, terms: usize) -> Vec<f64> {
    (1..=terms)
        .map(|j| match spacing {
            Spacing::WellSpaced => alt_sign(j) * (j as f64).powf(-alpha / 2.0),
            Spacing::CloselySpaced => {
                if j == 1 {
                    1.0
                } else if j <= 4 {
                    0.2 * alt_sign(j) * (1.0 - 0.0001 * j as f64)
                } else {
                    let block = j / 5;
                    let k = j % 5;
                    0.2 * alt_sign(j)
                        * ((5.0 * block as f64).powf(-alpha / 2.0) - 0.0001 * k as f64)
                }
            }
        })
        .collect()
}

/// `b_1 = 1`, `b_j = 4 (-1)^{j+1} j^{-2}`.
pub fn slope_coefficient(j: usize) -> f64 {
    if j == 1 {
        1.0
    } else {
        4.0 * alt_sign(j) / (j * j) as f64
    }
}

/// Basis coefficients of the chosen slope, length `terms`.
pub fn beta_coefficients(choice: &BetaChoice, terms: usize) -> Vec<f64> {
    (1..=terms)
        .map(|j| match choice {
            BetaChoice::Beta1 => slope_coefficient(j),
            BetaChoice::Beta2 => {
                if j <= 5 {
                    slope_coefficient(j)
                } else {
                    0.0
                }
            }
            BetaChoice::Beta3 => {
                if j > 5 {
                    slope_coefficient(j)
                } else {
                    0.0
                }
            }
            BetaChoice::Custom(b) => b.get(j - 1).copied().unwrap_or(0.0),
        })
        .collect()
}

/// Fraction of `sum_j lambda_j` carried by the first `k` eigenvalues.
pub fn variance_share(gammas: &[f64], k: usize) -> f64 {
    let total: f64 = gammas.iter().map(|g| g * g).sum();
    let head: f64 = gammas.iter().take(k).map(|g| g * g).sum();
    head / total
}

fn synthesize(basis: &[Curve], coeffs: &[f64], m: usize) -> Curve {
    let mut out = Curve::zeros(m);
    for (phi, &c) in basis.iter().zip(coeffs) {
        if c != 0.0 {
            out.add_scaled(c, phi);
        }
    }
    out
}

/// Population eigenstructure of a design as seen on its grid.
#[derive(Debug, Clone)]
pub struct PopulationTruth {
    grid: Grid,
    eigvals: Vec<f64>,
    eigfuns: Vec<Curve>,
    beta_coeffs: Vec<f64>,
    beta: Curve,
    sigma2: f64,
    kurtosis: f64,
}

impl PopulationTruth {
    pub fn from_design(design: &SimDesign) -> Result<Self> {
        design.validate()?;
        let grid = design.build_grid()?;
        let basis = kl_basis(&grid, design.terms);
        let gammas = gamma_sequence(design.spacing, design.alpha_decay, design.terms);
        let coeffs = beta_coefficients(&design.beta_choice, design.terms);
        let beta = synthesize(&basis, &coeffs, grid.len());

        let mut comps: Vec<(f64, Curve, f64)> = basis
            .into_iter()
            .zip(&gammas)
            .zip(&coeffs)
            .filter(|((phi, _), _)| phi.norm_m() > ALIAS_TOL)
            .map(|((phi, g), b)| (g * g, phi, *b))
            .collect();
        comps.sort_by(|a, b| b.0.total_cmp(&a.0));
        let eigvals = comps.iter().map(|c| c.0).collect();
        let beta_coeffs = comps.iter().map(|c| c.2).collect();
        let eigfuns = comps.into_iter().map(|c| c.1).collect();
        Ok(Self {
            grid,
            eigvals,
            eigfuns,
            beta_coeffs,
            beta,
            sigma2: design.noise_sd * design.noise_sd,
            kurtosis: design.scores.kurtosis(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigfuns(&self) -> &[Curve] {
        &self.eigfuns
    }

    pub fn beta_coeffs(&self) -> &[f64] {
        &self.beta_coeffs
    }

    pub fn beta(&self) -> &Curve {
        &self.beta
    }

    /// Oracle split with population (zero) means.
    pub fn oracle_split(&self, r: usize) -> Result<OracleSplit> {
        Ok(
            OracleSplit::new(self.grid.clone(), self.eigvals.clone(), &self.eigfuns, r)?
                .with_centering(Centering::Known {
                    x_mean: Curve::zeros(self.grid.len()),
                    y_mean: 0.0,
                }),
        )
    }

    pub fn population_model(&self, r: usize) -> Result<PopulationModel> {
        PopulationModel::new(
            self.eigvals.clone(),
            self.beta_coeffs.clone(),
            self.sigma2,
            vec![self.kurtosis; self.eigvals.len()],
            r,
        )?
        .with_eigfuns(self.eigfuns.clone())
    }
}

/// One simulated replication.
#[derive(Debug, Clone)]
pub struct Replication {
    pub data: FunctionalDataset,
    pub beta_true: Curve,
    pub truth: PopulationTruth,
}

impl Replication {
    pub fn oracle_split(&self, r: usize) -> Result<OracleSplit> {
        self.truth.oracle_split(r)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_score<R: Rng>(dist: ScoreDistribution, rng: &mut R) -> f64 {
    match dist {
        ScoreDistribution::Uniform => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
        ScoreDistribution::Gaussian => StandardNormal.sample(rng),
        ScoreDistribution::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
    }
}

/// Replication `0` of the design.
pub fn draw_dataset(design: &SimDesign) -> Result<Replication> {
    draw_replication(design, 0)
}

pub fn draw_replication(design: &SimDesign, rep: u64) -> Result<Replication> {
    let truth = PopulationTruth::from_design(design)?;
    let grid = truth.grid.clone();
    let m = grid.len();
    let basis = kl_basis(&grid, design.terms);
    let gammas = gamma_sequence(design.spacing, design.alpha_decay, design.terms);
    let mut rng = rng_for(design.seed, rep);

    let mut x = DMatrix::zeros(design.n, m);
    let mut y = Vec::with_capacity(design.n);
    for i in 0..design.n {
        let mut row = vec![0.0; m];
        for (phi, g) in basis.iter().zip(&gammas) {
            let z = g * draw_score(design.scores, &mut rng);
            for (v, p) in row.iter_mut().zip(phi.values()) {
                *v += z * p;
            }
        }
        let signal: f64 = row
            .iter()
            .zip(truth.beta.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / m as f64;
        let eps = if design.noise_sd > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            design.noise_sd * z
        } else {
            0.0
        };
        y.push(signal + eps);
        for (p, v) in row.into_iter().enumerate() {
            x[(i, p)] = v;
        }
    }
    if design.measurement_error_sd > 0.0 {
        let normal = Normal::new(0.0, design.measurement_error_sd)
            .map_err(|e| Error::Domain(e.to_string()))?;
        for v in x.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let data = FunctionalDataset::from_matrix(grid, y, x)?;
    Ok(Replication {
        data,
        beta_true: truth.beta.clone(),
        truth,
    })
}

/// `W_i(t_p) = X_i(t_p) + xi_ip` with `xi ~ N(0, sd^2)`; responses are kept.
pub fn add_measurement_error(
    data: &FunctionalDataset,
    sd: f64,
    seed: u64,
) -> Result<FunctionalDataset> {
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(Error::Domain(format!("measurement error sd must be nonnegative, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(data.clone());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = data.x().clone();
    for v in x.iter_mut() {
        *v += normal.sample(&mut rng);
    }
    data.with_curves(x)
}
