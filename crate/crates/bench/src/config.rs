//! Experiment configuration. A config is a single flat JSON object: every
//! simulation design and tuning field sits at the top level.

use std::path::{Path, PathBuf};

use fda_hybrid::selection::log_grid;
use fda_hybrid::simgen::{BetaChoice, SimDesign};
use fda_hybrid::Method;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SelectionMode {
    Fixed,
    Gcv,
    Kfold,
    DoubleCv,
    /// Minimum over the tuning grid of the Monte-Carlo mean error; needs
    /// the true slope, so simulation only.
    OracleBest,
}

impl SelectionMode {
    pub fn label(self) -> &'static str {
        match self {
            SelectionMode::Fixed => "fixed",
            SelectionMode::Gcv => "gcv",
            SelectionMode::Kfold => "kfold",
            SelectionMode::DoubleCv => "double_cv",
            SelectionMode::OracleBest => "oracle_best",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    /// First column is the response, the rest are curve values.
    #[default]
    ResponseFirst,
    /// Curves in `data_file`, responses (one per line) in `response_file`.
    TwoFile,
}

/// Tuning grids shared by every selection mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningConfig {
    /// Truncation levels searched for ST.
    pub st_r_values: Vec<usize>,
    /// Unpenalised block sizes searched for HR.
    pub hr_r_values: Vec<usize>,
    /// Ridge grid in units of the leading eigenvalue: the population one
    /// when the truth is known, otherwise the empirical one.
    pub rho_values: Vec<f64>,
    pub fixed_r: usize,
    pub fixed_rho: f64,
    pub folds: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            st_r_values: (1..=20).collect(),
            hr_r_values: (1..=5).collect(),
            rho_values: log_grid(1e-6, 10.0, 40),
            fixed_r: 5,
            fixed_rho: 0.01,
            folds: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub design: SimDesign,
    /// Decay exponents to sweep; empty means `alpha_decay` alone.
    pub alphas: Vec<f64>,
    /// Slopes to sweep; empty means `beta_choice` alone.
    pub betas: Vec<BetaChoice>,
    pub methods: Vec<Method>,
    pub selection: Vec<SelectionMode>,
    #[serde(flatten)]
    pub tuning: TuningConfig,
    pub replications: usize,
    /// 0 uses every available core.
    pub workers: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub data_file: Option<PathBuf>,
    pub response_file: Option<PathBuf>,
    pub layout: LayoutKind,
    pub train_frac: f64,
    pub splits: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            design: SimDesign::default(),
            alphas: Vec::new(),
            betas: Vec::new(),
            methods: vec![Method::SpectralTruncation, Method::Tikhonov, Method::Hybrid],
            selection: vec![SelectionMode::Kfold, SelectionMode::OracleBest],
            tuning: TuningConfig::default(),
            replications: 1000,
            workers: 0,
            output: None,
            format: OutputFormat::Csv,
            data_file: None,
            response_file: None,
            layout: LayoutKind::ResponseFirst,
            train_frac: 0.5,
            splits: 1000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if let Some(m) = self
            .methods
            .iter()
            .find(|m| !matches!(m, Method::SpectralTruncation | Method::Tikhonov | Method::Hybrid))
        {
            return bad(format!("method {m} cannot be benchmarked directly"));
        }
        if self.selection.is_empty() {
            return bad("at least one selection mode is required".into());
        }
        for &alpha in self.alpha_values().iter() {
            let d = SimDesign {
                alpha_decay: alpha,
                ..self.design.clone()
            };
            d.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        }
        let t = &self.tuning;
        if t.rho_values.is_empty() || t.rho_values.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("rho_values must be a nonempty list of positive numbers".into());
        }
        if t.st_r_values.is_empty() || t.st_r_values.contains(&0) {
            return bad("st_r_values must be nonempty and positive".into());
        }
        if t.hr_r_values.is_empty() {
            return bad("hr_r_values must be nonempty".into());
        }
        if !(t.fixed_rho > 0.0 && t.fixed_rho.is_finite()) {
            return bad("fixed_rho must be positive".into());
        }
        if t.folds < 2 {
            return bad("folds must be at least 2".into());
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad("train_frac must lie strictly between 0 and 1".into());
        }
        if self.splits == 0 {
            return bad("splits must be at least 1".into());
        }
        Ok(())
    }

    pub fn alpha_values(&self) -> Vec<f64> {
        if self.alphas.is_empty() {
            vec![self.design.alpha_decay]
        } else {
            self.alphas.clone()
        }
    }

    pub fn beta_values(&self) -> Vec<BetaChoice> {
        if self.betas.is_empty() {
            vec![self.design.beta_choice.clone()]
        } else {
            self.betas.clone()
        }
    }

    /// Every `(beta, alpha)` design of the sweep, beta-major.
    pub fn designs(&self) -> Vec<SimDesign> {
        let mut out = Vec::new();
        for beta in self.beta_values() {
            for alpha in self.alpha_values() {
                out.push(SimDesign {
                    alpha_decay: alpha,
                    beta_choice: beta.clone(),
                    ..self.design.clone()
                });
            }
        }
        out
    }
}

pub fn beta_label(b: &BetaChoice) -> &'static str {
    match b {
        BetaChoice::Beta1 => "beta1",
        BetaChoice::Beta2 => "beta2",
        BetaChoice::Beta3 => "beta3",
        BetaChoice::Custom(_) => "custom",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_keys_reach_nested_fields() {
        let cfg = ExperimentConfig::from_json(
            r#"{"alpha_decay": 2.0, "spacing": "closely_spaced", "beta_choice": "beta2",
                "methods": ["HR"], "selection": ["double_cv"], "replications": 7,
                "hr_r_values": [1, 2], "folds": 5, "seed": 11}"#,
        )
        .unwrap();
        assert_eq!(cfg.design.alpha_decay, 2.0);
        assert_eq!(cfg.design.beta_choice, BetaChoice::Beta2);
        assert_eq!(cfg.design.seed, 11);
        assert_eq!(cfg.tuning.hr_r_values, vec![1, 2]);
        assert_eq!(cfg.tuning.folds, 5);
        assert_eq!(cfg.replications, 7);
        assert_eq!(cfg.design.n, 100);
    }

    #[test]
    fn rejects_invalid_configs() {
        for text in [
            r#"{"replications": 0}"#,
            r#"{"methods": []}"#,
            r#"{"methods": ["HR_oracle"]}"#,
            r#"{"alphas": [0.5]}"#,
            r#"{"rho_values": [-1.0]}"#,
            r#"{"train_frac": 1.0}"#,
            r#"{"replications": "many"}"#,
        ] {
            assert!(
                matches!(ExperimentConfig::from_json(text), Err(BenchError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn designs_are_beta_major() {
        let cfg = ExperimentConfig {
            alphas: vec![1.1, 2.0],
            betas: vec![BetaChoice::Beta1, BetaChoice::Beta3],
            ..ExperimentConfig::default()
        };
        let d = cfg.designs();
        assert_eq!(d.len(), 4);
        assert_eq!(d[1].alpha_decay, 2.0);
        assert_eq!(d[2].beta_choice, BetaChoice::Beta3);
    }
}
