//! Closed-form power and assurance for a single normal mean.
//!
//! With outcome SD `σ`, the design prior is `N(θd, σ²/n_d)` and the analysis
//! prior is `N(θd, σ²/n_a)`; `Δ` is the distance from `θd` to the threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statkit::{phi, std_normal_quantile};

/// Prior precision expressed as a prior sample size, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSize {
    Finite(f64),
    #[serde(with = "infinite_tag")]
    Infinite,
}

mod infinite_tag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("inf")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "inf" | "infinity" | "Infinity" => Ok(()),
            other => Err(D::Error::custom(format!("expected \"inf\", got {other:?}"))),
        }
    }
}

impl PriorSize {
    pub fn is_infinite(&self) -> bool {
        matches!(self, PriorSize::Infinite)
    }
}

impl From<f64> for PriorSize {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            PriorSize::Infinite
        } else {
            PriorSize::Finite(v)
        }
    }
}

/// Parameters of the scalar normal-mean problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarDesign {
    pub delta: f64,
    pub sigma: f64,
    pub n: f64,
    #[serde(default)]
    pub n0: f64,
    #[serde(default)]
    pub n_a: f64,
    pub n_d: PriorSize,
}

fn check_common(delta: f64, sigma: f64, n: f64, alpha: f64) -> Result<()> {
    if !delta.is_finite() {
        return Err(Error::domain(format!("delta = {delta} is not finite")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma = {sigma} must be positive")));
    }
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::domain(format!("n = {n} must be positive")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha = {alpha} is not in (0, 1)")));
    }
    Ok(())
}

/// `Φ(√n·Δ/σ + Z_α)`
pub fn freq_power(delta: f64, sigma: f64, n: f64, alpha: f64) -> Result<f64> {
    check_common(delta, sigma, n, alpha)?;
    Ok(phi(n.sqrt() * delta / sigma + std_normal_quantile(alpha)?))
}

/// Real-valued `n` at which [`freq_power`] reaches `power`: `(Z_α + Z_β)²(σ/Δ)²`.
pub fn freq_sample_size(delta: f64, sigma: f64, alpha: f64, power: f64) -> Result<f64> {
    check_common(delta, sigma, 1.0, alpha)?;
    if delta <= 0.0 {
        return Err(Error::domain("a positive effect is needed to solve for n"));
    }
    if !(power > alpha && power < 1.0) {
        return Err(Error::domain(format!("power = {power} is not in (alpha, 1)")));
    }
    let z = std_normal_quantile(alpha)? + std_normal_quantile(1.0 - power)?;
    Ok(z * z * (sigma / delta).powi(2))
}

/// Assurance when the same prior (precision `n0`) is used for design and analysis.
pub fn single_prior_assurance(delta: f64, sigma: f64, n: f64, n0: f64, alpha: f64) -> Result<f64> {
    check_common(delta, sigma, n, alpha)?;
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(Error::domain(format!("n0 = {n0} must be finite and nonnegative")));
    }
    if n0 == 0.0 {
        return Ok(0.5);
    }
    let z = std_normal_quantile(alpha)?;
    let arg = n0.sqrt() * ((1.0 + n0 / n).sqrt() * delta / sigma + z * (1.0 / n).sqrt());
    Ok(phi(arg))
}

/// Assurance with analysis precision `n_a` and design precision `n_d`.
pub fn two_prior_assurance(
    delta: f64,
    sigma: f64,
    n: f64,
    n_a: f64,
    n_d: PriorSize,
    alpha: f64,
) -> Result<f64> {
    check_common(delta, sigma, n, alpha)?;
    if !(n_a >= 0.0 && n_a.is_finite()) {
        return Err(Error::domain(format!("n_a = {n_a} must be finite and nonnegative")));
    }
    let scale = match n_d {
        PriorSize::Infinite => {
            if n_a == 0.0 {
                return freq_power(delta, sigma, n, alpha);
            }
            n.sqrt()
        }
        PriorSize::Finite(nd) if nd > 0.0 && nd.is_finite() => (n * nd / (n + nd)).sqrt(),
        PriorSize::Finite(nd) => {
            return Err(Error::domain(format!("n_d = {nd} must be positive")));
        }
    };
    let z = std_normal_quantile(alpha)?;
    let arg = scale * ((n + n_a) / n * delta / sigma + z * (n + n_a).sqrt() / n);
    Ok(phi(arg))
}

impl ScalarDesign {
    pub fn freq_power(&self, alpha: f64) -> Result<f64> {
        freq_power(self.delta, self.sigma, self.n, alpha)
    }

    pub fn single_prior(&self, alpha: f64) -> Result<f64> {
        single_prior_assurance(self.delta, self.sigma, self.n, self.n0, alpha)
    }

    pub fn two_prior(&self, alpha: f64) -> Result<f64> {
        two_prior_assurance(self.delta, self.sigma, self.n, self.n_a, self.n_d, alpha)
    }
}
