//! Configuration, expression parsing, CSV reporting and scenario dispatch
//! behind the `fbreg` binary.

pub mod config;
pub mod expr;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, Scenario};
pub use expr::{Expr, ExprError};
pub use report::{format_f64, Cell, Report};
pub use run::{run, Command, RunOutput};
