// `!(x > 0.0)` guards deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod cli;
pub mod error;
pub mod free_boundary;
pub mod harnack;
pub mod metrics;
pub mod operator;
pub mod profiles;
pub mod solver;

pub use error::{Error, Module, Result};
