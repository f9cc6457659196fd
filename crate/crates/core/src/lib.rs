// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod heat_content;
pub mod levy;
pub mod numerics;
pub mod parallel;
pub mod plot;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod subordinator;
pub mod validate;

pub use error::{Error, Result};
