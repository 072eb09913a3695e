//! Two independent proportions with beta priors. A replicate counts when the
//! moment-based `100(1 − α)%` interval for `p₁ − p₂` excludes zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc_engine::{count_successes, AssuranceEstimate, MCSettings};
use crate::statkit::{phi, sample_beta, sample_binomial, std_normal_quantile, RngStream};

/// Where each replicate's true proportions come from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrueProportions {
    /// Drawn from the beta priors.
    Prior,
    /// Known values.
    Exact { p1: f64, p2: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropDesign {
    pub n1: u64,
    pub n2: u64,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub truth: TrueProportions,
    pub alpha: f64,
}

impl PropDesign {
    /// Equal arm sizes and one shared `Beta(a, b)` prior.
    pub fn balanced(n: u64, a: f64, b: f64, truth: TrueProportions, alpha: f64) -> Self {
        Self {
            n1: n,
            n2: n,
            alpha1: a,
            beta1: b,
            alpha2: a,
            beta2: b,
            truth,
            alpha,
        }
    }

    pub fn with_n(&self, n: u64) -> Self {
        Self { n1: n, n2: n, ..*self }
    }

    /// Exchange the two arms.
    pub fn swapped(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
            alpha1: self.alpha2,
            beta1: self.beta2,
            alpha2: self.alpha1,
            beta2: self.beta1,
            truth: match self.truth {
                TrueProportions::Exact { p1, p2 } => TrueProportions::Exact { p1: p2, p2: p1 },
                t => t,
            },
            alpha: self.alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("beta1", self.beta1),
            ("alpha2", self.alpha2),
            ("beta2", self.beta2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} = {v} must be positive")));
            }
        }
        if let TrueProportions::Exact { p1, p2 } = self.truth {
            if !(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0) {
                return Err(Error::domain(format!("exact proportions ({p1}, {p2}) must lie in (0, 1)")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {} is not in (0, 1)", self.alpha)));
        }
        Ok(())
    }

    fn arm(&self, i: usize) -> (u64, f64, f64) {
        if i == 0 {
            (self.n1, self.alpha1, self.beta1)
        } else {
            (self.n2, self.alpha2, self.beta2)
        }
    }
}

fn beta_moments(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (a / s, a * b / (s * s * (s + 1.0)))
}

/// Mean and variance of `p₁ − p₂` under the two independent beta posteriors.
pub fn posterior_diff_moments(x1: u64, x2: u64, design: &PropDesign) -> Result<(f64, f64)> {
    if x1 > design.n1 || x2 > design.n2 {
        return Err(Error::domain(format!(
            "successes ({x1}, {x2}) exceed arm sizes ({}, {})",
            design.n1, design.n2
        )));
    }
    let (m1, v1) = beta_moments(design.alpha1 + x1 as f64, design.beta1 + (design.n1 - x1) as f64);
    let (m2, v2) = beta_moments(design.alpha2 + x2 as f64, design.beta2 + (design.n2 - x2) as f64);
    Ok((m1 - m2, v1 + v2))
}

/// `mean ± z₁₋α/₂·√variance`
pub fn credible_interval(x1: u64, x2: u64, design: &PropDesign) -> Result<(f64, f64)> {
    let (m, v) = posterior_diff_moments(x1, x2, design)?;
    let half = std_normal_quantile(1.0 - design.alpha / 2.0)? * v.sqrt();
    Ok((m - half, m + half))
}

/// One replicate. Arm `i` draws its proportion and successes from
/// `rng.substream(streams[i])`.
pub fn replicate_decision(design: &PropDesign, z: f64, rng: &RngStream, streams: [u64; 2]) -> Result<bool> {
    let mut x = [0u64; 2];
    for i in 0..2 {
        let (n, a, b) = design.arm(i);
        let mut sub = rng.substream(streams[i]);
        let p = match design.truth {
            TrueProportions::Exact { p1, p2 } => [p1, p2][i],
            TrueProportions::Prior => sample_beta(a, b, &mut sub)?,
        };
        x[i] = sample_binomial(n, p, &mut sub)?;
    }
    let (m, v) = posterior_diff_moments(x[0], x[1], design)?;
    let half = z * v.sqrt();
    Ok(m - half > 0.0 || m + half < 0.0)
}

pub fn assurance_two_prop(design: &PropDesign, settings: &MCSettings) -> Result<AssuranceEstimate> {
    assurance_two_prop_streams(design, settings, [0, 1])
}

/// As [`assurance_two_prop`] with an explicit arm-to-substream assignment.
pub fn assurance_two_prop_streams(
    design: &PropDesign,
    settings: &MCSettings,
    streams: [u64; 2],
) -> Result<AssuranceEstimate> {
    design.validate()?;
    let z = std_normal_quantile(1.0 - design.alpha / 2.0)?;
    let hits = count_successes(settings, |rng| replicate_decision(design, z, rng, streams))?;
    Ok(AssuranceEstimate::from_counts(hits, settings.replicates, None, settings.master_seed))
}

fn check_props(p1: f64, p2: f64, alpha: f64) -> Result<()> {
    if !(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0) {
        return Err(Error::domain(format!("proportions ({p1}, {p2}) must lie in (0, 1)")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha = {alpha} is not in (0, 1)")));
    }
    Ok(())
}

/// `Φ(√n·|p₁ − p₂|/√(p₁q₁ + p₂q₂) − z₁₋α/₂)`
pub fn freq_prop_power(p1: f64, p2: f64, n: f64, alpha: f64) -> Result<f64> {
    check_props(p1, p2, alpha)?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::domain(format!("n = {n} must be positive")));
    }
    let s = (p1 * (1.0 - p1) + p2 * (1.0 - p2)).sqrt();
    Ok(phi(n.sqrt() * (p1 - p2).abs() / s - std_normal_quantile(1.0 - alpha / 2.0)?))
}

/// Per-arm `n` at which [`freq_prop_power`] reaches `power`, before rounding.
pub fn freq_prop_sample_size(p1: f64, p2: f64, alpha: f64, power: f64) -> Result<f64> {
    check_props(p1, p2, alpha)?;
    if p1 == p2 {
        return Err(Error::domain("equal proportions have no finite sample size"));
    }
    if !(power > alpha / 2.0 && power < 1.0) {
        return Err(Error::domain(format!("power = {power} is not attainable")));
    }
    let z = std_normal_quantile(1.0 - alpha / 2.0)? + std_normal_quantile(power)?;
    Ok(z * z * (p1 * (1.0 - p1) + p2 * (1.0 - p2)) / (p1 - p2).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: u64, truth: TrueProportions) -> PropDesign {
        PropDesign::balanced(n, 1.0, 1.0, truth, 0.05)
    }

    #[test]
    fn moments_example() {
        let d = PropDesign::balanced(50, 2.0, 2.0, TrueProportions::Prior, 0.05);
        let (m, v) = posterior_diff_moments(30, 20, &d).unwrap();
        assert!((m - 10.0 / 54.0).abs() < 1e-15);
        let oracle = 2.0 * 32.0 * 22.0 / (54.0f64.powi(2) * 55.0);
        assert!((v - oracle).abs() < 1e-15);
        assert!((v - 0.0087792).abs() < 1e-7);
        let (m, _) = posterior_diff_moments(17, 17, &d).unwrap();
        assert_eq!(m, 0.0);
        assert!(posterior_diff_moments(51, 0, &d).is_err());
    }

    #[test]
    fn variance_shrinks_with_n() {
        let mut prev = f64::INFINITY;
        for k in 1..6u64 {
            let n = 10u64.pow(k as u32);
            let d = PropDesign::balanced(n, 2.0, 2.0, TrueProportions::Prior, 0.05);
            let (_, v) = posterior_diff_moments(3 * n / 10, n / 2, &d).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn interval_contains_mean() {
        let d = flat(40, TrueProportions::Prior);
        for x1 in 0..=40 {
            let (lo, hi) = credible_interval(x1, 40 - x1, &d).unwrap();
            let (m, _) = posterior_diff_moments(x1, 40 - x1, &d).unwrap();
            assert!(lo <= m && m <= hi);
        }
    }

    #[test]
    fn freq_power_examples() {
        assert!((freq_prop_power(0.3, 0.3, 100.0, 0.05).unwrap() - 0.025).abs() < 1e-14);
        let p = freq_prop_power(0.25, 0.5, 100.0, 0.05).unwrap();
        assert!((p - 0.9656).abs() < 1e-4, "{p}");
        let n = freq_prop_sample_size(0.25, 0.5, 0.05, 0.8).unwrap();
        assert!(freq_prop_power(0.25, 0.5, n.ceil(), 0.05).unwrap() >= 0.8);
        assert!(freq_prop_power(0.25, 0.5, n.ceil() - 1.0, 0.05).unwrap() < 0.8);
        assert!((freq_prop_power(0.25, 0.5, n, 0.05).unwrap() - 0.8).abs() < 1e-12);
        assert!(freq_prop_power(0.0, 0.5, 10.0, 0.05).is_err());
    }

    #[test]
    fn null_exact_behaves_like_size() {
        let d = flat(200, TrueProportions::Exact { p1: 0.5, p2: 0.5 });
        let est = assurance_two_prop(&d, &MCSettings::new(20_000, 2)).unwrap();
        assert!((est.delta_hat - 0.05).abs() < 0.02, "{}", est.delta_hat);
    }

    #[test]
    fn one_observation_rarely_excludes_zero() {
        let d = flat(1, TrueProportions::Exact { p1: 0.2, p2: 0.8 });
        let est = assurance_two_prop(&d, &MCSettings::new(2000, 2)).unwrap();
        assert!(est.delta_hat < 0.05);
    }

    #[test]
    fn swapping_arms_and_streams_is_invariant() {
        let d = PropDesign {
            n1: 60,
            n2: 80,
            alpha1: 2.0,
            beta1: 3.0,
            alpha2: 1.5,
            beta2: 1.0,
            truth: TrueProportions::Exact { p1: 0.3, p2: 0.55 },
            alpha: 0.05,
        };
        let s = MCSettings::new(3000, 17);
        let a = assurance_two_prop_streams(&d, &s, [0, 1]).unwrap();
        let b = assurance_two_prop_streams(&d.swapped(), &s, [1, 0]).unwrap();
        assert_eq!(a, b);
        let prior = PropDesign { truth: TrueProportions::Prior, ..d };
        let a = assurance_two_prop_streams(&prior, &s, [0, 1]).unwrap();
        let b = assurance_two_prop_streams(&prior.swapped(), &s, [1, 0]).unwrap();
        assert_eq!(a, b);
    }
}
