#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod regression;
pub mod scoring;
pub mod simulator;
pub mod stream;

pub use error::{Error, Result};
