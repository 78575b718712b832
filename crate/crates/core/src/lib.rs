// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bb84;
pub mod classifier;
pub mod config;
pub mod datasets;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod pipeline;
pub mod qcore;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};
