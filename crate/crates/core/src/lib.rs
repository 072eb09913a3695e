//! Bayesian assurance and sample-size determination.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assurance;
pub mod betabinom;
pub mod cli;
pub mod conjugate_lm;
pub mod costeff;
pub mod error;
pub mod mc_engine;
pub mod precision;
pub mod sizing;
pub mod statkit;

pub use error::{Error, Result};
