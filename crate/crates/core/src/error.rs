use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("singular matrix (det = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("argument is not deviatoric (trace = {trace:e})")]
    NotDeviatoric { trace: f64 },

    #[error("conjugate flow rule did not converge: residual {residual:e} after {iterations} iterations")]
    ConjugateNotConverged { residual: f64, iterations: usize },

    #[error("value {value} outside the admissible interval [0, 1]")]
    BoundViolation { value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{stage}: Newton iteration failed, residual {residual:e} after {iterations} iterations")]
    NewtonDiverged {
        stage: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("linear solver stalled: relative residual {residual:e} after {iterations} iterations")]
    LinearSolve { residual: f64, iterations: usize },

    #[error("non-positive density {value:e} in cell {cell}")]
    NonPositiveDensity { cell: usize, value: f64 },

    #[error("non-positive det Fe {value:e} in cell {cell}")]
    NonPositiveDeterminant { cell: usize, value: f64 },

    #[error("Gronwall certificate invalid: tau * a = {a_tau} >= 1")]
    InvalidCertificate { a_tau: f64 },

    #[error("reference trajectory collapsed (det Fe <= 0) at t = {time}")]
    Collapse { time: f64 },

    #[error("step {step} (t = {time}) failed: {source}")]
    StepFailed {
        step: usize,
        time: f64,
        source: Box<Error>,
    },

    #[error("step {step}: retry budget exhausted at tau = {tau:e}: {last}")]
    RetryBudgetExhausted {
        step: usize,
        tau: f64,
        last: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Step index carried by step-level failures.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::StepFailed { step, .. } | Error::RetryBudgetExhausted { step, .. } => {
                Some(*step)
            }
            _ => None,
        }
    }
}
