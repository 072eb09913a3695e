//! Assurance curves over a sample-size grid and the smallest `n` reaching a
//! target assurance.

mod isotonic;

pub use isotonic::{isotonic, isotonic_fit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc_engine::{AssuranceEstimate, MCSettings};
use crate::statkit::mix_seed;

/// Anything that can estimate assurance at a sample size.
pub trait AssuranceEvaluator: Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, n: usize, settings: &MCSettings) -> Result<AssuranceEstimate>;

    /// True when the value does not depend on replicates or seed.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Closed-form evaluator built from `n ↦ δ(n)`.
pub struct ClosedForm<F> {
    name: String,
    f: F,
}

impl<F: Fn(usize) -> Result<f64> + Sync> ClosedForm<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F: Fn(usize) -> Result<f64> + Sync> AssuranceEvaluator for ClosedForm<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, n: usize, settings: &MCSettings) -> Result<AssuranceEstimate> {
        Ok(AssuranceEstimate::exact((self.f)(n)?, settings.master_seed))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Simulation evaluator built from `(n, settings) ↦ δ̂(n)`.
pub struct MonteCarlo<F> {
    name: String,
    f: F,
}

impl<F: Fn(usize, &MCSettings) -> Result<AssuranceEstimate> + Sync> MonteCarlo<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F: Fn(usize, &MCSettings) -> Result<AssuranceEstimate> + Sync> AssuranceEvaluator for MonteCarlo<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, n: usize, settings: &MCSettings) -> Result<AssuranceEstimate> {
        (self.f)(n, settings)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range { min: usize, max: usize, step: usize },
    Points(Vec<usize>),
}

impl Grid {
    /// Sorted, de-duplicated, positive grid points.
    pub fn points(&self) -> Result<Vec<usize>> {
        let mut pts: Vec<usize> = match self {
            Grid::Range { min, max, step } => {
                if *step == 0 {
                    return Err(Error::config("grid step must be at least 1"));
                }
                if min > max {
                    return Err(Error::config(format!("grid min {min} exceeds max {max}")));
                }
                (*min..=*max).step_by(*step).collect()
            }
            Grid::Points(p) => p.clone(),
        };
        pts.sort_unstable();
        pts.dedup();
        if pts.first() == Some(&0) {
            return Err(Error::config("grid points must be at least 1"));
        }
        if pts.is_empty() {
            return Err(Error::config("sample-size grid is empty"));
        }
        Ok(pts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingRequest {
    pub gamma: f64,
    pub grid: Grid,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_inner")]
    pub inner_samples: usize,
    /// Bisection stops once the bracket is this narrow.
    #[serde(default = "default_tolerance")]
    pub tolerance: usize,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
}

fn default_workers() -> usize {
    1
}

fn default_inner() -> usize {
    500
}

fn default_tolerance() -> usize {
    1
}

fn default_depth() -> usize {
    12
}

impl SizingRequest {
    pub fn new(gamma: f64, grid: Grid, replicates: usize, seed: u64) -> Self {
        Self {
            gamma,
            grid,
            replicates,
            seed,
            workers: default_workers(),
            inner_samples: default_inner(),
            tolerance: default_tolerance(),
            max_depth: default_depth(),
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<Vec<usize>> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!("gamma = {} is not in (0, 1)", self.gamma)));
        }
        if self.tolerance == 0 {
            return Err(Error::config("tolerance must be at least 1"));
        }
        self.coarse_settings().validate()?;
        self.grid.points()
    }

    fn coarse_settings(&self) -> MCSettings {
        MCSettings {
            replicates: self.replicates,
            inner_samples: self.inner_samples,
            master_seed: self.seed,
            workers: self.workers,
        }
    }

    /// Refinement probes use twice the replicates and a seed of their own,
    /// shared by every probe.
    fn refine_settings(&self) -> MCSettings {
        MCSettings {
            replicates: self.replicates * 2,
            master_seed: mix_seed(self.seed, 0x5EED),
            ..self.coarse_settings()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub assurance: f64,
    pub stderr: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl CurvePoint {
    fn from_estimate(n: usize, e: &AssuranceEstimate) -> Self {
        Self {
            n,
            assurance: e.delta_hat,
            stderr: e.stderr,
            replicates: e.replicates,
            seed: e.master_seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum NStar {
    Achieved { n: usize },
    NotAchieved { max_assurance: f64 },
}

impl NStar {
    pub fn value(&self) -> Option<usize> {
        match self {
            NStar::Achieved { n } => Some(*n),
            NStar::NotAchieved { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingResult {
    pub n_star: NStar,
    pub gamma: f64,
    pub curve: Vec<CurvePoint>,
    /// Isotonic fit of `curve`.
    pub smoothed: Vec<f64>,
    /// Bisection probes, sorted by `n`.
    pub refinement: Vec<CurvePoint>,
    pub seed: u64,
    pub engine: String,
}

fn evaluate_at<E: AssuranceEvaluator + ?Sized>(e: &E, n: usize, s: &MCSettings) -> Result<AssuranceEstimate> {
    e.evaluate(n, s).map_err(|err| err.at_n(n))
}

fn smooth(curve: &[CurvePoint]) -> Vec<f64> {
    let v: Vec<f64> = curve.iter().map(|p| p.assurance).collect();
    let w: Vec<f64> = curve.iter().map(|p| p.replicates.max(1) as f64).collect();
    isotonic_fit(&v, &w)
}

fn first_reaching(smoothed: &[f64], gamma: f64) -> Option<usize> {
    smoothed.iter().position(|v| *v >= gamma)
}

fn max_assurance(curve: &[CurvePoint]) -> f64 {
    curve.iter().map(|p| p.assurance).fold(0.0, f64::max)
}

/// One estimate per grid point, all sharing the request seed.
pub fn assurance_curve<E: AssuranceEvaluator + ?Sized>(engine: &E, req: &SizingRequest) -> Result<SizingResult> {
    let pts = req.validate()?;
    let settings = req.coarse_settings();
    let curve = pts
        .iter()
        .map(|&n| evaluate_at(engine, n, &settings).map(|e| CurvePoint::from_estimate(n, &e)))
        .collect::<Result<Vec<_>>>()?;
    let smoothed = smooth(&curve);
    let n_star = match first_reaching(&smoothed, req.gamma) {
        Some(i) => NStar::Achieved { n: curve[i].n },
        None => NStar::NotAchieved {
            max_assurance: max_assurance(&curve),
        },
    };
    Ok(SizingResult {
        n_star,
        gamma: req.gamma,
        curve,
        smoothed,
        refinement: Vec::new(),
        seed: req.seed,
        engine: engine.name().to_string(),
    })
}

/// Smallest `n` whose assurance reaches `gamma`: coarse curve, isotonic
/// smoothing, then bisection inside the bracketing grid interval.
pub fn min_sample_size<E: AssuranceEvaluator + ?Sized>(engine: &E, req: &SizingRequest) -> Result<SizingResult> {
    let mut result = assurance_curve(engine, req)?;
    let Some(first) = first_reaching(&result.smoothed, req.gamma) else {
        return Ok(result);
    };
    let pts: Vec<usize> = result.curve.iter().map(|p| p.n).collect();
    let settings = if engine.is_deterministic() {
        req.coarse_settings()
    } else {
        req.refine_settings()
    };

    let mut probes: Vec<CurvePoint> = Vec::new();
    let mut probe = |n: usize| -> Result<bool> {
        if let Some(p) = probes.iter().find(|p| p.n == n) {
            return Ok(p.assurance >= req.gamma);
        }
        let e = evaluate_at(engine, n, &settings)?;
        probes.push(CurvePoint::from_estimate(n, &e));
        Ok(e.delta_hat >= req.gamma)
    };

    // Re-check the bracket at refinement precision and slide it along the
    // grid if the finer estimates disagree with the coarse pass.
    let mut hi_idx = first;
    while !probe(pts[hi_idx])? {
        hi_idx += 1;
        if hi_idx == pts.len() {
            let max = probes.iter().map(|p| p.assurance).fold(max_assurance(&result.curve), f64::max);
            probes.sort_by_key(|p| p.n);
            result.refinement = probes;
            result.n_star = NStar::NotAchieved { max_assurance: max };
            return Ok(result);
        }
    }
    let mut lo_idx = hi_idx;
    while lo_idx > 0 {
        lo_idx -= 1;
        if !probe(pts[lo_idx])? {
            break;
        }
        hi_idx = lo_idx;
    }

    let mut hi = pts[hi_idx];
    if hi_idx > 0 {
        let mut lo = pts[hi_idx - 1];
        let mut depth = 0;
        while hi - lo > req.tolerance && depth < req.max_depth {
            let mid = lo + (hi - lo) / 2;
            if probe(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
            depth += 1;
        }
    }
    probes.sort_by_key(|p| p.n);
    result.refinement = probes;
    result.n_star = NStar::Achieved { n: hi };
    Ok(result)
}

/// Least-squares `δ ≈ a + b·ln n` through a curve, for reporting only.
pub fn log_fit(curve: &[CurvePoint]) -> Option<(f64, f64)> {
    if curve.len() < 2 {
        return None;
    }
    let k = curve.len() as f64;
    let xs: Vec<f64> = curve.iter().map(|p| (p.n as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = curve.iter().map(|p| p.assurance).sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(curve).map(|(x, p)| (x - mx) * (p.assurance - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}
