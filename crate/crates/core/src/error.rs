use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("beam splitter is not unitary (deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("OAM superposition has no components")]
    EmptySuperposition,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("no condensate: chemical potential {mu:.6e} does not exceed the potential minimum {minimum:.6e}")]
    NoCondensate { mu: f64, minimum: f64 },

    #[error("chemical potential not bracketed: normalization reaches only {reached:.6e} at the upper bound")]
    ChemicalPotentialBracket { reached: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge after {evaluations} evaluations (estimate {value:.12e}, error bound {error_bound:.3e})")]
    Accuracy { value: f64, error_bound: f64, evaluations: usize },

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); the problem looks stiff")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t:.6e}")]
    StepBudget { t: f64, max_steps: usize },

    #[error("inconsistent wavefunction ansatz: {0}")]
    InconsistentAnsatz(String),

    #[error("analysis failed: {0}")]
    Analysis(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: &str) -> Error {
    Error::InvalidParameter { name, reason: String::from(reason) }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, "must be finite and positive"))
    }
}

pub(crate) fn require_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(name, "must be finite"))
    }
}
