use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, StandardNormal};

use super::cholesky::CholeskyFactor;
use crate::error::{Error, Result};

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn sample_normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> Result<f64> {
    if !mean.is_finite() || !sd.is_finite() || sd < 0.0 {
        return Err(Error::domain(format!("normal(mean = {mean}, sd = {sd})")));
    }
    Ok(mean + sd * standard_normal(rng))
}

/// Gamma with the given shape and rate.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!("gamma(shape = {shape}, rate = {rate})")));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain(e.to_string()))?;
    Ok(g.sample(rng))
}

/// Inverse gamma with density proportional to `x^(-a-1) exp(-b/x)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::domain(format!("inverse gamma(a = {a}, b = {b})")));
    }
    Ok(1.0 / sample_gamma(a, b, rng)?)
}

pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::domain(format!("beta(a = {a}, b = {b})")));
    }
    let d = Beta::new(a, b).map_err(|e| Error::domain(e.to_string()))?;
    Ok(d.sample(rng))
}

pub fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("binomial(n = {n}, p = {p})")));
    }
    let d = Binomial::new(n, p).map_err(|e| Error::domain(e.to_string()))?;
    Ok(d.sample(rng))
}

/// Multivariate normal sampler with the covariance factored once.
#[derive(Clone, Debug)]
pub struct MvnSampler {
    mean: DVector<f64>,
    factor: CholeskyFactor,
}

impl MvnSampler {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() {
            return Err(Error::dimension(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(Self {
            mean,
            factor: CholeskyFactor::new(cov)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    /// Draw `mean + scale · L z`.
    pub fn sample_scaled<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| standard_normal(rng));
        &self.mean + self.factor.mul_lower(&z) * scale
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        self.sample_scaled(1.0, rng)
    }
}

/// One draw from `N(mean, cov)`.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(MvnSampler::new(mean.clone(), cov)?.sample(rng))
}
