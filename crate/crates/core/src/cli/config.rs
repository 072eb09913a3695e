//! Scenario files: one flat JSON object. Every field is optional in the file;
//! which ones are required depends on `scenario` and `engine`.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assurance::{
    freq_power, freq_sample_size, single_prior_assurance, two_prior_assurance, PriorSize,
};
use crate::betabinom::{assurance_two_prop, freq_prop_power, freq_prop_sample_size, PropDesign, TrueProportions};
use crate::conjugate_lm::InverseGamma;
use crate::costeff::{self, CostEffConfig};
use crate::error::{Error, Result};
use crate::mc_engine::{scalar_model, AssuranceProblem, MCSettings};
use crate::precision::{assurance_precision, freq_precision_sample_size, PrecisionConfig, PrecisionMode};
use crate::sizing::{AssuranceEvaluator, ClosedForm, Grid, MonteCarlo, SizingRequest};
use crate::statkit::phi;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Scalar,
    Costeff,
    Precision,
    TwoProp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    ClosedForm,
    McKnownVar,
    McUnknownVar,
}

impl ScenarioKind {
    pub fn label(&self) -> &'static str {
        match self {
            ScenarioKind::Scalar => "scalar",
            ScenarioKind::Costeff => "costeff",
            ScenarioKind::Precision => "precision",
            ScenarioKind::TwoProp => "two-prop",
        }
    }
}

impl EngineKind {
    pub fn label(&self) -> &'static str {
        match self {
            EngineKind::ClosedForm => "closed-form",
            EngineKind::McKnownVar => "mc-known-var",
            EngineKind::McUnknownVar => "mc-unknown-var",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineKind>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,

    // scalar
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_d: Option<PriorSize>,

    // costeff
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_ig: Option<InverseGamma>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis_ig: Option<InverseGamma>,

    // precision
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_mode: Option<PrecisionMode>,

    // two-prop
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_proportions: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,

    // search and simulation
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,

    // outputs
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_file: Option<PathBuf>,
}

/// Worker count when none is configured.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

fn need<T: Clone>(v: &Option<T>, field: &str, scenario: ScenarioKind) -> Result<T> {
    v.clone().ok_or_else(|| {
        Error::config(format!(
            "missing field `{field}` required by scenario {}",
            scenario.label()
        ))
    })
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid scenario file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario config serializes")
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &ScenarioConfig) {
        overlay!(self, other;
            scenario, engine, n, alpha, delta, sigma, n0, n_a, n_d, k, sigma2, tau2,
            design_ig, analysis_ig, d, theta0_a, theta0_d, precision_mode, p1, p2,
            exact_proportions, alpha1, beta1, alpha2, beta2, gamma, grid, replicates,
            inner_samples, seed, workers, curve_file, summary_file,
        );
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn scenario_kind(&self) -> Result<ScenarioKind> {
        self.scenario
            .ok_or_else(|| Error::config("missing field `scenario` (scalar, costeff, precision or two-prop)"))
    }

    /// Fill every default the chosen scenario uses, so the echoed config is
    /// complete, and check that required fields are present. The seed is left
    /// alone.
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let kind = self.scenario_kind()?;
        let mut c = self.clone();
        let default_engine = match kind {
            ScenarioKind::Scalar => EngineKind::ClosedForm,
            _ => EngineKind::McKnownVar,
        };
        let engine = *c.engine.get_or_insert(default_engine);
        let default_alpha = if kind == ScenarioKind::Costeff {
            costeff::DEFAULT_ALPHA
        } else {
            0.05
        };
        c.alpha.get_or_insert(default_alpha);
        if engine != EngineKind::ClosedForm {
            c.replicates.get_or_insert(if kind == ScenarioKind::Costeff { 30_000 } else { 10_000 });
            if engine == EngineKind::McUnknownVar {
                c.inner_samples.get_or_insert(500);
            }
        }
        match kind {
            ScenarioKind::Scalar => {
                need(&c.delta, "delta", kind)?;
                c.sigma.get_or_insert(1.0);
                if c.n0.is_none() {
                    c.n_a.get_or_insert(0.0);
                    c.n_d.get_or_insert(PriorSize::Infinite);
                }
                if engine == EngineKind::McUnknownVar {
                    need(&c.design_ig, "design_ig", kind)?;
                    need(&c.analysis_ig, "analysis_ig", kind)?;
                }
                if engine != EngineKind::ClosedForm && c.n0.is_some() {
                    return Err(Error::config(
                        "n0 selects the single-prior closed form; use n_a and n_d with simulation engines",
                    ));
                }
            }
            ScenarioKind::Costeff => {
                need(&c.k, "K", kind)?;
                c.sigma2.get_or_insert(costeff::DEFAULT_SIGMA2);
                c.tau2.get_or_insert(costeff::DEFAULT_TAU2);
                match engine {
                    EngineKind::ClosedForm => {
                        return Err(Error::config("scenario costeff has no closed-form engine"));
                    }
                    EngineKind::McUnknownVar => {
                        need(&c.design_ig, "design_ig", kind)?;
                        need(&c.analysis_ig, "analysis_ig", kind)?;
                    }
                    EngineKind::McKnownVar => {}
                }
            }
            ScenarioKind::Precision => {
                need(&c.d, "d", kind)?;
                need(&c.sigma2, "sigma2", kind)?;
                c.n_a.get_or_insert(0.0);
                c.theta0_a.get_or_insert(0.0);
                c.theta0_d.get_or_insert(0.0);
                match engine {
                    EngineKind::ClosedForm => {
                        if c.n_a != Some(0.0) {
                            return Err(Error::config("scenario precision has a closed form only when n_a = 0"));
                        }
                    }
                    EngineKind::McKnownVar => {
                        need(&c.n_d, "n_d", kind)?;
                        c.precision_mode.get_or_insert(PrecisionMode::SampleMean);
                    }
                    EngineKind::McUnknownVar => {
                        return Err(Error::config("scenario precision supports only known variance"));
                    }
                }
            }
            ScenarioKind::TwoProp => {
                match engine {
                    EngineKind::ClosedForm => {
                        need(&c.p1, "p1", kind)?;
                        need(&c.p2, "p2", kind)?;
                    }
                    EngineKind::McKnownVar => {
                        for (v, name) in [
                            (&c.alpha1, "alpha1"),
                            (&c.beta1, "beta1"),
                            (&c.alpha2, "alpha2"),
                            (&c.beta2, "beta2"),
                        ] {
                            need(v, name, kind)?;
                        }
                        if *c.exact_proportions.get_or_insert(false) {
                            need(&c.p1, "p1", kind)?;
                            need(&c.p2, "p2", kind)?;
                        }
                    }
                    EngineKind::McUnknownVar => {
                        return Err(Error::config("scenario two-prop has no unknown-variance engine"));
                    }
                }
            }
        }
        Ok(c)
    }

    fn default_grid(kind: ScenarioKind) -> Grid {
        match kind {
            ScenarioKind::Costeff => Grid::Range { min: 100, max: 1500, step: 100 },
            ScenarioKind::TwoProp => Grid::Range { min: 10, max: 500, step: 10 },
            _ => Grid::Range { min: 1, max: 200, step: 1 },
        }
    }

    /// Grid for curves and searches, filled with the scenario default.
    pub fn resolve_grid(&mut self) -> Result<Grid> {
        let kind = self.scenario_kind()?;
        Ok(self.grid.get_or_insert_with(|| Self::default_grid(kind)).clone())
    }

    pub fn settings(&self, seed: u64) -> MCSettings {
        MCSettings {
            replicates: self.replicates.unwrap_or(1),
            inner_samples: self.inner_samples.unwrap_or(500),
            master_seed: seed,
            workers: self.workers.unwrap_or_else(default_workers).max(1),
        }
    }

    pub fn sizing_request(&self, seed: u64, gamma: f64) -> Result<SizingRequest> {
        let kind = self.scenario_kind()?;
        let s = self.settings(seed);
        Ok(SizingRequest {
            workers: s.workers,
            inner_samples: s.inner_samples,
            ..SizingRequest::new(gamma, self.grid.clone().unwrap_or(Self::default_grid(kind)), s.replicates, seed)
        })
    }

    /// Evaluator for a resolved config.
    pub fn evaluator(&self) -> Result<Box<dyn AssuranceEvaluator>> {
        let kind = self.scenario_kind()?;
        let engine = self.engine.ok_or_else(|| Error::config("missing field `engine`"))?;
        let alpha = need(&self.alpha, "alpha", kind)?;
        let name = engine.label();
        Ok(match (kind, engine) {
            (ScenarioKind::Scalar, EngineKind::ClosedForm) => {
                let (delta, sigma) = (need(&self.delta, "delta", kind)?, self.sigma.unwrap_or(1.0));
                if let Some(n0) = self.n0 {
                    Box::new(ClosedForm::new(name, move |n| {
                        single_prior_assurance(delta, sigma, n as f64, n0, alpha)
                    }))
                } else {
                    let n_a = self.n_a.unwrap_or(0.0);
                    let n_d = self.n_d.unwrap_or(PriorSize::Infinite);
                    Box::new(ClosedForm::new(name, move |n| {
                        two_prior_assurance(delta, sigma, n as f64, n_a, n_d, alpha)
                    }))
                }
            }
            (ScenarioKind::Scalar, _) => {
                let delta = need(&self.delta, "delta", kind)?;
                let sigma = self.sigma.unwrap_or(1.0);
                let n_a = self.n_a.unwrap_or(0.0);
                let n_d = self.n_d.unwrap_or(PriorSize::Infinite);
                let (dig, aig) = (self.design_ig, self.analysis_ig);
                let known = engine == EngineKind::McKnownVar;
                Box::new(MonteCarlo::new(name, move |n, s: &MCSettings| {
                    let (design, mut dprior, mut aprior, hyp) = scalar_model(delta, n, n_a, n_d, alpha)?;
                    dprior.ig = dig;
                    aprior.ig = aig;
                    let p = AssuranceProblem::new(&design, &dprior, &aprior, &hyp)?;
                    if known {
                        p.known_var(sigma * sigma, s)
                    } else {
                        p.unknown_var(s)
                    }
                }))
            }
            (ScenarioKind::Costeff, EngineKind::ClosedForm) => {
                return Err(Error::config("scenario costeff has no closed-form engine"));
            }
            (ScenarioKind::Costeff, _) => {
                let base = CostEffConfig {
                    k: need(&self.k, "K", kind)?,
                    n: 1,
                    sigma2: self.sigma2.unwrap_or(costeff::DEFAULT_SIGMA2),
                    tau2: self.tau2.unwrap_or(costeff::DEFAULT_TAU2),
                    alpha,
                    design_ig: self.design_ig,
                    analysis_ig: self.analysis_ig,
                };
                base.validate()?;
                let known = engine == EngineKind::McKnownVar;
                Box::new(MonteCarlo::new(name, move |n, s: &MCSettings| {
                    let cfg = base.with_n(n);
                    if known {
                        costeff::assurance_known(&cfg, s)
                    } else {
                        costeff::assurance_unknown(&cfg, s)
                    }
                }))
            }
            (ScenarioKind::Precision, EngineKind::ClosedForm) => {
                let d = need(&self.d, "d", kind)?;
                let sigma = need(&self.sigma2, "sigma2", kind)?.sqrt();
                if self.n_a.unwrap_or(0.0) != 0.0 {
                    return Err(Error::config("scenario precision has a closed form only when n_a = 0"));
                }
                Box::new(ClosedForm::new(name, move |n| {
                    let cover = 2.0 * phi((n as f64).sqrt() * d / sigma) - 1.0;
                    Ok(if cover >= 1.0 - alpha { 1.0 } else { 0.0 })
                }))
            }
            (ScenarioKind::Precision, EngineKind::McKnownVar) => {
                let base = PrecisionConfig {
                    n: 1,
                    d: need(&self.d, "d", kind)?,
                    theta0_a: self.theta0_a.unwrap_or(0.0),
                    theta0_d: self.theta0_d.unwrap_or(0.0),
                    n_a: self.n_a.unwrap_or(0.0),
                    n_d: need(&self.n_d, "n_d", kind)?,
                    sigma2: need(&self.sigma2, "sigma2", kind)?,
                    alpha,
                };
                base.validate()?;
                let mode = self.precision_mode.unwrap_or_default();
                Box::new(MonteCarlo::new(name, move |n, s: &MCSettings| {
                    assurance_precision(&base.with_n(n), mode, s)
                }))
            }
            (ScenarioKind::TwoProp, EngineKind::ClosedForm) => {
                let (p1, p2) = (need(&self.p1, "p1", kind)?, need(&self.p2, "p2", kind)?);
                Box::new(ClosedForm::new(name, move |n| freq_prop_power(p1, p2, n as f64, alpha)))
            }
            (ScenarioKind::TwoProp, EngineKind::McKnownVar) => {
                let truth = if self.exact_proportions.unwrap_or(false) {
                    TrueProportions::Exact {
                        p1: need(&self.p1, "p1", kind)?,
                        p2: need(&self.p2, "p2", kind)?,
                    }
                } else {
                    TrueProportions::Prior
                };
                let base = PropDesign {
                    n1: 1,
                    n2: 1,
                    alpha1: need(&self.alpha1, "alpha1", kind)?,
                    beta1: need(&self.beta1, "beta1", kind)?,
                    alpha2: need(&self.alpha2, "alpha2", kind)?,
                    beta2: need(&self.beta2, "beta2", kind)?,
                    truth,
                    alpha,
                };
                base.validate()?;
                Box::new(MonteCarlo::new(name, move |n, s: &MCSettings| {
                    assurance_two_prop(&base.with_n(n as u64), s)
                }))
            }
            (k, e) => {
                return Err(Error::config(format!(
                    "scenario {} has no {} engine",
                    k.label(),
                    e.label()
                )));
            }
        })
    }

    /// Frequentist power at `n` and, when `gamma` is set, the frequentist
    /// sample size reaching it.
    pub fn frequentist(&self, n: usize) -> Result<(f64, Option<f64>)> {
        let kind = self.scenario_kind()?;
        let alpha = need(&self.alpha, "alpha", kind)?;
        match kind {
            ScenarioKind::Scalar => {
                let delta = need(&self.delta, "delta", kind)?;
                let sigma = self.sigma.unwrap_or(1.0);
                let size = match self.gamma {
                    Some(g) => Some(freq_sample_size(delta, sigma, alpha, g)?),
                    None => None,
                };
                Ok((freq_power(delta, sigma, n as f64, alpha)?, size))
            }
            ScenarioKind::TwoProp => {
                let (p1, p2) = (need(&self.p1, "p1", kind)?, need(&self.p2, "p2", kind)?);
                let size = match self.gamma {
                    Some(g) => Some(freq_prop_sample_size(p1, p2, alpha, g)?),
                    None => None,
                };
                Ok((freq_prop_power(p1, p2, n as f64, alpha)?, size))
            }
            ScenarioKind::Precision => {
                let d = need(&self.d, "d", kind)?;
                let sigma = need(&self.sigma2, "sigma2", kind)?.sqrt();
                let cover = 2.0 * phi((n as f64).sqrt() * d / sigma) - 1.0;
                Ok((cover, Some(freq_precision_sample_size(d, sigma, alpha)? as f64)))
            }
            ScenarioKind::Costeff => Err(Error::config("scenario costeff has no frequentist power")),
        }
    }
}
