//! Two-arm cost-effectiveness trial with net monetary benefit
//! `ξ = K(μ₂ − μ₁) − (γ₂ − γ₁)` and `β = (μ₁, γ₁, μ₂, γ₂)`.
//!
//! Rows of `y` are grouped as efficacy of arm 1, cost of arm 1, efficacy of
//! arm 2, cost of arm 2, each group holding `n` observations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conjugate_lm::{
    AnalysisPrior, DesignPrior, Hypothesis, InverseGamma, ModelDesign, NoiseCorrelation,
};
use crate::error::{Error, Result};
use crate::mc_engine::{AssuranceEstimate, AssuranceProblem, MCSettings};

/// Prior mean of `(μ₁, γ₁, μ₂, γ₂)`.
pub const PRIOR_MEAN: [f64; 4] = [5.0, 6000.0, 6.5, 7200.0];

/// Prior covariance of `β` on the outcome scale, row major.
pub const PRIOR_COV: [[f64; 4]; 4] = [
    [4.0, 0.0, 3.0, 0.0],
    [0.0, 1e7, 0.0, 0.0],
    [3.0, 0.0, 4.0, 0.0],
    [0.0, 0.0, 0.0, 1e7],
];

pub const DEFAULT_SIGMA2: f64 = 17.0;
pub const DEFAULT_TAU2: f64 = 4.9e7;
pub const DEFAULT_ALPHA: f64 = 0.025;

fn default_sigma2() -> f64 {
    DEFAULT_SIGMA2
}

fn default_tau2() -> f64 {
    DEFAULT_TAU2
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostEffConfig {
    #[serde(rename = "K")]
    pub k: f64,
    pub n: usize,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_tau2")]
    pub tau2: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_ig: Option<InverseGamma>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis_ig: Option<InverseGamma>,
}

impl CostEffConfig {
    pub fn new(k: f64, n: usize) -> Self {
        Self {
            k,
            n,
            sigma2: DEFAULT_SIGMA2,
            tau2: DEFAULT_TAU2,
            alpha: DEFAULT_ALPHA,
            design_ig: None,
            analysis_ig: None,
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::domain(format!("K = {} must be finite and nonnegative", self.k)));
        }
        if self.n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::domain(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        if !(self.tau2 > 0.0 && self.tau2.is_finite()) {
            return Err(Error::domain(format!("tau2 = {} must be positive", self.tau2)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {} is not in (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

/// `4n × 4` block design with `1ₙ` blocks and `Vₙ = diag(Iₙ, (τ²/σ²)Iₙ, Iₙ, (τ²/σ²)Iₙ)`.
pub fn build_design(cfg: &CostEffConfig) -> Result<ModelDesign> {
    cfg.validate()?;
    let n = cfg.n;
    let mut x = DMatrix::zeros(4 * n, 4);
    for block in 0..4 {
        x.view_mut((block * n, block), (n, 1)).fill(1.0);
    }
    let ratio = cfg.tau2 / cfg.sigma2;
    let diag: Vec<f64> = (0..4 * n)
        .map(|i| if (i / n).is_multiple_of(2) { 1.0 } else { ratio })
        .collect();
    ModelDesign::new(x, NoiseCorrelation::diagonal(diag)?, n)?.with_row_groups(vec![n; 4])
}

/// `u = (−K, 1, K, −1)`, `C = 0`.
pub fn build_contrast(k: f64, alpha: f64) -> Result<Hypothesis> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::domain(format!("K = {k} must be finite and nonnegative")));
    }
    Hypothesis::new(DVector::from_vec(vec![-k, 1.0, k, -1.0]), 0.0, alpha)
}

pub fn prior_cov() -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| PRIOR_COV[i][j])
}

/// Design prior with the published covariance expressed relative to `σ²`, and
/// the weak (zero-precision) analysis prior.
pub fn ohagan_priors(sigma2: f64) -> Result<(DesignPrior, AnalysisPrior)> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::domain(format!("sigma2 = {sigma2} must be positive")));
    }
    let dprior = DesignPrior::new(DVector::from_row_slice(&PRIOR_MEAN), prior_cov() / sigma2, None)?;
    Ok((dprior, AnalysisPrior::vague(4)))
}

/// Assurance of the configured trial, known variance.
pub fn assurance_known(cfg: &CostEffConfig, settings: &MCSettings) -> Result<AssuranceEstimate> {
    problem(cfg)?.known_var(cfg.sigma2, settings)
}

/// Assurance of the configured trial with inverse-gamma priors on `σ²`.
pub fn assurance_unknown(cfg: &CostEffConfig, settings: &MCSettings) -> Result<AssuranceEstimate> {
    problem(cfg)?.unknown_var(settings)
}

fn problem(cfg: &CostEffConfig) -> Result<AssuranceProblem> {
    let design = build_design(cfg)?;
    let (mut dprior, mut aprior) = ohagan_priors(cfg.sigma2)?;
    dprior.ig = cfg.design_ig;
    aprior.ig = cfg.analysis_ig;
    AssuranceProblem::new(&design, &dprior, &aprior, &build_contrast(cfg.k, cfg.alpha)?)
}
