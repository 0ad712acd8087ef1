use thiserror::Error;

use crate::ddsolver::{Bias, SolutionState};
use crate::device::SpecViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid device spec: {}", format_violations(.0))]
    InvalidSpec(Vec<SpecViolation>),

    #[error("index {index} out of range ({len} nodes)")]
    Index { index: usize, len: usize },

    #[error("range error: {0}")]
    Range(String),

    #[error("window error: {0}")]
    Window(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("linear solver did not converge after {iterations} sweeps (relative residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("{0}")]
    Convergence(Box<ConvergenceFailure>),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("policy error: {0}")]
    Policy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::LinearSolver { .. } | Error::Convergence(_)
        )
    }
}

/// Outer-loop failure at a particular bias point.
#[derive(Debug)]
pub struct ConvergenceFailure {
    /// Bias at which the Gummel loop gave up.
    pub bias: Bias,
    /// Max potential update (V) of every outer iteration attempted.
    pub history: Vec<f64>,
    /// Last converged state on the continuation path, if any.
    pub last_good: Option<SolutionState>,
    pub reason: String,
}

impl std::fmt::Display for ConvergenceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "no convergence at Vg={} Vd={} Vs={} Vsub={} after {} iterations: {}",
            self.bias.gate,
            self.bias.drain,
            self.bias.source,
            self.bias.substrate,
            self.history.len(),
            self.reason
        )?;
        if let Some(last) = self.history.last() {
            write!(f, " (last update {last:e} V)")?;
        }
        Ok(())
    }
}

fn format_violations(v: &[SpecViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
