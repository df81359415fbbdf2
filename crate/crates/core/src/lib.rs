//! Slope estimation for scalar-on-function linear regression with spectral
//! truncation, Tikhonov and hybrid regularisation.
//!
//! Curves live on a fixed grid in `[0, 1]` with the Riemann inner product
//! `<f, g>_m = m^{-1} sum_p f(t_p) g(t_p)`. Every estimator is a spectral
//! filter on the eigendecomposition of the empirical covariance operator.

pub mod analytic;
pub mod error;
pub mod estimators;
pub mod fda;
pub mod selection;
pub mod simgen;
pub mod spectrum;

pub use error::{Error, Result};
pub use estimators::{
    fit, fit_hybrid, fit_hybrid_oracle, fit_spectral_truncation, fit_tikhonov,
    fit_tikhonov_oracle, mse_against_truth, predict, Centering, Method, OracleSplit, Regularizer,
    SlopeEstimate,
};
pub use fda::{center, inner_product, Curve, FunctionalDataset, Grid, GridKind};
pub use spectrum::{empirical_spectrum, CovSpectrum};
