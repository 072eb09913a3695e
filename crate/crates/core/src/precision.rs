//! Precision-based assurance: the posterior must put at least `1 − α` on
//! `|x̄ − θ| ≤ d`.

use serde::{Deserialize, Serialize};

use crate::assurance::PriorSize;
use crate::error::{Error, Result};
use crate::mc_engine::{count_successes, AssuranceEstimate, MCSettings};
use crate::statkit::{phi, standard_normal, std_normal_quantile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionConfig {
    pub n: usize,
    pub d: f64,
    #[serde(default)]
    pub theta0_a: f64,
    #[serde(default)]
    pub theta0_d: f64,
    #[serde(default)]
    pub n_a: f64,
    pub n_d: PriorSize,
    pub sigma2: f64,
    pub alpha: f64,
}

/// Where the coverage condition is evaluated in each replicate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecisionMode {
    /// At the simulated sample mean.
    #[default]
    SampleMean,
    /// At a draw of `θ` from the posterior.
    PosteriorDraw,
}

impl PrecisionConfig {
    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !(self.d > 0.0) {
            return Err(Error::domain(format!("d = {} must be positive", self.d)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::domain(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        if !(self.n_a >= 0.0 && self.n_a.is_finite()) {
            return Err(Error::domain(format!("n_a = {} must be nonnegative", self.n_a)));
        }
        if let PriorSize::Finite(nd) = self.n_d {
            if !(nd > 0.0 && nd.is_finite()) {
                return Err(Error::domain(format!("n_d = {nd} must be positive")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {} is not in (0, 1)", self.alpha)));
        }
        if !self.theta0_a.is_finite() || !self.theta0_d.is_finite() {
            return Err(Error::domain("prior means must be finite"));
        }
        Ok(())
    }

    /// Posterior mean `λ = (n·x̄ + n_a·θ₀ᵃ)/(n_a + n)`, written so that it is
    /// exactly `x̄` when `n_a = 0`.
    pub fn lambda(&self, xbar: f64) -> f64 {
        xbar + self.n_a * (self.theta0_a - xbar) / (self.n_a + self.n as f64)
    }

    /// SD of the design marginal of `x̄`.
    pub fn xbar_sd(&self) -> f64 {
        let n = self.n as f64;
        let var = match self.n_d {
            PriorSize::Infinite => self.sigma2 / n,
            PriorSize::Finite(nd) => self.sigma2 * (nd + n) / (n * nd),
        };
        var.sqrt()
    }

    fn coverage_at(&self, point: f64, lambda: f64) -> f64 {
        let s = (self.n_a + self.n as f64).sqrt() / self.sigma2.sqrt();
        let c = phi(s * (point + self.d - lambda)) - phi(s * (point - self.d - lambda));
        c.clamp(0.0, 1.0)
    }
}

/// Posterior probability that `θ` lies within `d` of `x̄`.
pub fn inner_coverage(xbar: f64, cfg: &PrecisionConfig) -> Result<f64> {
    cfg.validate()?;
    if !xbar.is_finite() {
        return Err(Error::domain("sample mean must be finite"));
    }
    Ok(cfg.coverage_at(xbar, cfg.lambda(xbar)))
}

pub fn assurance_precision(
    cfg: &PrecisionConfig,
    mode: PrecisionMode,
    settings: &MCSettings,
) -> Result<AssuranceEstimate> {
    cfg.validate()?;
    let target = 1.0 - cfg.alpha;
    let sd = cfg.xbar_sd();
    let post_sd = (cfg.sigma2 / (cfg.n_a + cfg.n as f64)).sqrt();
    let hits = count_successes(settings, |rng| {
        let xbar = cfg.theta0_d + sd * standard_normal(rng);
        let lambda = cfg.lambda(xbar);
        let point = match mode {
            PrecisionMode::SampleMean => xbar,
            PrecisionMode::PosteriorDraw => lambda + post_sd * standard_normal(rng),
        };
        Ok(cfg.coverage_at(point, lambda) >= target)
    })?;
    Ok(AssuranceEstimate::from_counts(hits, settings.replicates, None, settings.master_seed))
}

/// `⌈z²₁₋α/₂·σ²/d²⌉`
pub fn freq_precision_sample_size(d: f64, sigma: f64, alpha: f64) -> Result<usize> {
    Ok(freq_precision_n(d, sigma, alpha)?.ceil() as usize)
}

/// The same quantity before rounding up.
pub fn freq_precision_n(d: f64, sigma: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite() && sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("d = {d} and sigma = {sigma} must be positive")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha = {alpha} is not in (0, 1)")));
    }
    let z = std_normal_quantile(1.0 - alpha / 2.0)?;
    Ok(z * z * sigma * sigma / (d * d))
}
