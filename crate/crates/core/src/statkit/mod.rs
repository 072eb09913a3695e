//! Normal distribution, samplers, Cholesky factors and random streams.

mod cholesky;
mod normal;
mod rng;
mod sample;

pub use cholesky::CholeskyFactor;
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub(crate) use normal::phi;
pub use rng::{mix_seed, RngStream};
pub use sample::{
    sample_beta, sample_binomial, sample_gamma, sample_inverse_gamma, sample_mvn, sample_normal,
    standard_normal, MvnSampler,
};
