use std::fmt;

use thiserror::Error;

/// Which part of the library raised an error. Used for CLI exit codes and
/// module-tagged diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Module {
    Operator,
    Profiles,
    Solver,
    FreeBoundary,
    Barriers,
    Metrics,
    Harnack,
    Cli,
    Io,
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Module::Operator => "operator",
            Module::Profiles => "profiles",
            Module::Solver => "solver",
            Module::FreeBoundary => "free_boundary",
            Module::Barriers => "barriers",
            Module::Metrics => "metrics",
            Module::Harnack => "harnack",
            Module::Cli => "cli",
            Module::Io => "io",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("[{module}] invalid parameter: {msg}")]
    InvalidParameter { module: Module, msg: String },

    #[error("[{module}] precondition violated: {msg}")]
    Precondition { module: Module, msg: String },

    #[error("[operator] quadrature did not converge: achieved error estimate {estimate:.3e} (target {target:.3e})")]
    Quadrature { estimate: f64, target: f64 },

    #[error("[operator] far-field cutoff too small: tail bound {bound:.3e} exceeds {target:.3e}")]
    TailCutoff { bound: f64, target: f64 },

    #[error("[solver] no convergence after {iterations} sweeps: residual {residual:.3e} (tol {tol:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("[solver] stagnation after {iterations} sweeps: residual {residual:.3e}")]
    Stagnation { iterations: usize, residual: f64 },

    #[error("[{module}] unresolved: {msg}")]
    Unresolved { module: Module, msg: String },

    #[error("[cli] {code} at line {line}: {msg}")]
    Config {
        code: &'static str,
        line: usize,
        msg: String,
    },

    #[error("[io] {0}")]
    Io(#[from] std::io::Error),

    #[error("[io] malformed grid file: {0}")]
    Format(String),

    #[error("[io] csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(module: Module, msg: impl Into<String>) -> Self {
        Error::InvalidParameter {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn pre(module: Module, msg: impl Into<String>) -> Self {
        Error::Precondition {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn unresolved(module: Module, msg: impl Into<String>) -> Self {
        Error::Unresolved {
            module,
            msg: msg.into(),
        }
    }

    pub fn module(&self) -> Module {
        match self {
            Error::InvalidParameter { module, .. }
            | Error::Precondition { module, .. }
            | Error::Unresolved { module, .. } => *module,
            Error::Quadrature { .. } | Error::TailCutoff { .. } => Module::Operator,
            Error::NoConvergence { .. } | Error::Stagnation { .. } => Module::Solver,
            Error::Config { .. } => Module::Cli,
            Error::Io(_) | Error::Format(_) | Error::Csv(_) => Module::Io,
        }
    }

    /// Process exit code, distinct per failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Io(_) | Error::Format(_) | Error::Csv(_) => 3,
            Error::NoConvergence { .. } | Error::Stagnation { .. } => 4,
            Error::Quadrature { .. } | Error::TailCutoff { .. } => 5,
            Error::Unresolved { .. } => 6,
            Error::InvalidParameter { .. } | Error::Precondition { .. } => match self.module() {
                Module::Operator => 10,
                Module::Profiles => 11,
                Module::Solver => 12,
                Module::FreeBoundary => 13,
                Module::Barriers => 14,
                Module::Metrics => 15,
                Module::Harnack => 16,
                Module::Cli => 2,
                Module::Io => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
