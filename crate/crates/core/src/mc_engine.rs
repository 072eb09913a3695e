//! Monte Carlo assurance: design-stage data generation, analysis-stage
//! decision, and a replicate loop whose result does not depend on scheduling.
//!
//! Replicate `r` owns `RngStream(master_seed, r)`. Its design-prior draw of
//! `ω` comes from substream 0 and the noise of row group `g` from substream
//! `g + 1`, so a larger design reuses the leading draws of a smaller one.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assurance::PriorSize;
use crate::conjugate_lm::{
    decide_unknown_var, AnalysisPrior, DesignPrior, Hypothesis, ModelDesign, NoiseCorrelation,
    Posterior, PosteriorKernel,
};
use crate::error::{Error, Result};
use crate::statkit::{sample_inverse_gamma, standard_normal, std_normal_quantile, CholeskyFactor, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MCSettings {
    pub replicates: usize,
    #[serde(default = "default_inner")]
    pub inner_samples: usize,
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_inner() -> usize {
    500
}

fn default_workers() -> usize {
    1
}

impl MCSettings {
    pub fn new(replicates: usize, master_seed: u64) -> Self {
        Self {
            replicates,
            inner_samples: default_inner(),
            master_seed,
            workers: default_workers(),
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_inner_samples(mut self, j: usize) -> Self {
        self.inner_samples = j;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::config("replicates must be at least 1"));
        }
        if self.inner_samples == 0 {
            return Err(Error::config("inner_samples must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssuranceEstimate {
    pub delta_hat: f64,
    pub stderr: f64,
    pub replicates: usize,
    pub inner_samples: Option<usize>,
    pub master_seed: u64,
    pub successes: u64,
}

impl AssuranceEstimate {
    pub fn from_counts(successes: u64, replicates: usize, inner: Option<usize>, master_seed: u64) -> Self {
        let r = replicates as f64;
        let d = successes as f64 / r;
        Self {
            delta_hat: d,
            stderr: (d * (1.0 - d) / r).sqrt(),
            replicates,
            inner_samples: inner,
            master_seed,
            successes,
        }
    }

    /// A deterministic value reported in estimate form.
    pub fn exact(value: f64, master_seed: u64) -> Self {
        Self {
            delta_hat: value,
            stderr: 0.0,
            replicates: 0,
            inner_samples: None,
            master_seed,
            successes: 0,
        }
    }
}

fn pool(workers: usize) -> Result<Arc<rayon::ThreadPool>> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    if let Some(p) = pools.get(&workers) {
        return Ok(p.clone());
    }
    let p = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))?;
    let p = Arc::new(p);
    pools.insert(workers, p.clone());
    Ok(p)
}

type Tally = std::result::Result<u64, (u64, Error)>;

fn merge(a: Tally, b: Tally) -> Tally {
    match (a, b) {
        (Ok(x), Ok(y)) => Ok(x + y),
        (Err(e), Ok(_)) | (Ok(_), Err(e)) => Err(e),
        (Err(e1), Err(e2)) => Err(if e1.0 <= e2.0 { e1 } else { e2 }),
    }
}

/// Count replicates for which `trial` returns true. The count, and the error
/// reported when several replicates fail, are the same for any worker count.
pub fn count_successes<F>(settings: &MCSettings, trial: F) -> Result<u64>
where
    F: Fn(&mut RngStream) -> Result<bool> + Sync,
{
    settings.validate()?;
    let seed = settings.master_seed;
    let one = |r: u64| -> Tally {
        let mut rng = RngStream::new(seed, r);
        trial(&mut rng).map(u64::from).map_err(|e| (r, e))
    };
    let total = if settings.workers == 1 {
        (0..settings.replicates as u64).map(one).fold(Ok(0), merge)
    } else {
        pool(settings.workers)?.install(|| {
            (0..settings.replicates as u64)
                .into_par_iter()
                .map(one)
                .reduce(|| Ok(0), merge)
        })
    };
    total.map_err(|(_, e)| e)
}

/// Draws `Xμ + Xω + e` with `ω ~ N(0, σ²V_β)` and `e ~ N(0, σ²Vₙ)`, without
/// forming the dense covariance.
#[derive(Clone, Debug)]
pub struct DesignDataGenerator {
    x: DMatrix<f64>,
    x_mu: DVector<f64>,
    omega: CholeskyFactor,
    noise: NoiseCorrelation,
    noise_sd: Option<DVector<f64>>,
    groups: Vec<usize>,
}

impl DesignDataGenerator {
    pub fn new(design: &ModelDesign, dprior: &DesignPrior) -> Result<Self> {
        if dprior.dim() != design.p() {
            return Err(Error::dimension(format!(
                "design prior has {} coefficients but X has {} columns",
                dprior.dim(),
                design.p()
            )));
        }
        Ok(Self {
            x: design.x.clone(),
            x_mu: &design.x * &dprior.mu,
            omega: CholeskyFactor::new(&dprior.cov)?,
            noise: design.noise.clone(),
            noise_sd: design.noise.diagonal_sd(),
            groups: design.row_groups().to_vec(),
        })
    }

    pub fn generate(&self, sigma2: f64, rng: &RngStream) -> Result<DVector<f64>> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("sigma2 = {sigma2} must be positive")));
        }
        let sigma = sigma2.sqrt();
        let mut sub = rng.substream(0);
        let z = DVector::from_fn(self.omega.dim(), |_, _| standard_normal(&mut sub));
        let omega = self.omega.mul_lower(&z) * sigma;

        let mut y = &self.x * omega;
        y += &self.x_mu;
        if let Some(sd) = &self.noise_sd {
            let mut at = 0;
            for (g, &len) in self.groups.iter().enumerate() {
                let mut sub = rng.substream(g as u64 + 1);
                for i in at..at + len {
                    y[i] += sigma * sd[i] * standard_normal(&mut sub);
                }
                at += len;
            }
            return Ok(y);
        }

        let mut e = DVector::zeros(self.x.nrows());
        let mut at = 0;
        for (g, &len) in self.groups.iter().enumerate() {
            let mut sub = rng.substream(g as u64 + 1);
            for v in e.rows_mut(at, len).iter_mut() {
                *v = standard_normal(&mut sub);
            }
            at += len;
        }
        self.noise.correlate(&mut e);
        y.axpy(sigma, &e, 1.0);
        Ok(y)
    }
}

pub fn generate_design_data(
    design: &ModelDesign,
    dprior: &DesignPrior,
    sigma2: f64,
    rng: &RngStream,
) -> Result<DVector<f64>> {
    DesignDataGenerator::new(design, dprior)?.generate(sigma2, rng)
}

/// Precomputed known-variance decision for a fixed design and hypothesis.
#[derive(Clone, Debug)]
pub struct KnownVarRule {
    u: DVector<f64>,
    c: f64,
    z_alpha: f64,
    scale: f64,
}

impl KnownVarRule {
    pub fn new(m_matrix: &DMatrix<f64>, hyp: &Hypothesis, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma = {sigma} must be positive")));
        }
        if hyp.u.len() != m_matrix.nrows() {
            return Err(Error::dimension(format!(
                "contrast has length {} but the model has {} coefficients",
                hyp.u.len(),
                m_matrix.nrows()
            )));
        }
        let spread = hyp.u.dot(&(m_matrix * &hyp.u));
        if !(spread > 0.0) {
            return Err(Error::numeric(format!("uᵀMu = {spread} is not positive")));
        }
        Ok(Self {
            u: hyp.u.clone(),
            c: hyp.c,
            z_alpha: std_normal_quantile(hyp.alpha)?,
            scale: sigma * spread.sqrt(),
        })
    }

    #[inline]
    pub fn decide(&self, mean: &DVector<f64>) -> bool {
        (self.c - self.u.dot(mean)) / self.scale < self.z_alpha
    }
}

/// All per-design state needed to run replicates at one sample size.
#[derive(Clone, Debug)]
pub struct AssuranceProblem {
    generator: DesignDataGenerator,
    kernel: PosteriorKernel,
    dprior: DesignPrior,
    aprior_has_ig: bool,
    hyp: Hypothesis,
}

impl AssuranceProblem {
    pub fn new(
        design: &ModelDesign,
        dprior: &DesignPrior,
        aprior: &AnalysisPrior,
        hyp: &Hypothesis,
    ) -> Result<Self> {
        if hyp.u.len() != design.p() {
            return Err(Error::dimension(format!(
                "contrast has length {} but X has {} columns",
                hyp.u.len(),
                design.p()
            )));
        }
        Ok(Self {
            generator: DesignDataGenerator::new(design, dprior)?,
            kernel: PosteriorKernel::new(design, aprior)?,
            dprior: dprior.clone(),
            aprior_has_ig: aprior.ig.is_some(),
            hyp: hyp.clone(),
        })
    }

    pub fn known_var(&self, sigma2: f64, settings: &MCSettings) -> Result<AssuranceEstimate> {
        let rule = KnownVarRule::new(self.kernel.m_matrix(), &self.hyp, sigma2.sqrt())?;
        let hits = count_successes(settings, |rng| {
            let y = self.generator.generate(sigma2, rng)?;
            Ok(rule.decide(&self.kernel.mean(&y)?))
        })?;
        Ok(AssuranceEstimate::from_counts(hits, settings.replicates, None, settings.master_seed))
    }

    pub fn unknown_var(&self, settings: &MCSettings) -> Result<AssuranceEstimate> {
        let ig_d = self
            .dprior
            .ig
            .ok_or_else(|| Error::config("unknown-variance assurance needs an inverse-gamma design prior"))?;
        if !self.aprior_has_ig {
            return Err(Error::config(
                "unknown-variance assurance needs an inverse-gamma analysis prior",
            ));
        }
        let j = settings.inner_samples;
        let hits = count_successes(settings, |rng| {
            let s2 = sample_inverse_gamma(ig_d.shape, ig_d.scale, rng)?;
            let y = self.generator.generate(s2, rng)?;
            let post: Posterior = self.kernel.update(&y)?;
            decide_unknown_var(&post, &self.hyp, j, rng)
        })?;
        Ok(AssuranceEstimate::from_counts(hits, settings.replicates, Some(j), settings.master_seed))
    }
}

pub fn assurance_known_var(
    design: &ModelDesign,
    dprior: &DesignPrior,
    aprior: &AnalysisPrior,
    hyp: &Hypothesis,
    sigma2: f64,
    settings: &MCSettings,
) -> Result<AssuranceEstimate> {
    AssuranceProblem::new(design, dprior, aprior, hyp)?.known_var(sigma2, settings)
}

pub fn assurance_unknown_var(
    design: &ModelDesign,
    dprior: &DesignPrior,
    aprior: &AnalysisPrior,
    hyp: &Hypothesis,
    settings: &MCSettings,
) -> Result<AssuranceEstimate> {
    AssuranceProblem::new(design, dprior, aprior, hyp)?.unknown_var(settings)
}

/// The normal-mean problem behind the closed forms, as a linear model:
/// `X = 1ₙ`, design prior `N(Δ, σ²/n_d)`, analysis prior `N(Δ, σ²/n_a)`,
/// `H: θ > 0`.
pub fn scalar_model(
    delta: f64,
    n: usize,
    n_a: f64,
    n_d: PriorSize,
    alpha: f64,
) -> Result<(ModelDesign, DesignPrior, AnalysisPrior, Hypothesis)> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let d_var = match n_d {
        PriorSize::Infinite => 0.0,
        PriorSize::Finite(v) if v > 0.0 => 1.0 / v,
        PriorSize::Finite(v) => return Err(Error::domain(format!("n_d = {v} must be positive"))),
    };
    let mu = DVector::from_element(1, delta);
    let dprior = DesignPrior::new(mu.clone(), DMatrix::from_element(1, 1, d_var), None)?;
    let aprior = AnalysisPrior::new(mu, DMatrix::from_element(1, 1, n_a), None)?;
    let hyp = Hypothesis::new(DVector::from_element(1, 1.0), 0.0, alpha)?;
    Ok((ModelDesign::scalar(n), dprior, aprior, hyp))
}
