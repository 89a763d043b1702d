use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Physics operations are total on their documented domains, so errors come
/// from validation (bad parameters, broken invariants), from parsing, or from
/// the numerical oracle giving up.
#[derive(Debug, Error)]
pub enum QubusError {
    /// A state or matrix failed a structural invariant (hermiticity, trace,
    /// positivity, ...). The message names the violated invariant.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A scalar argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A qubit index points outside the register.
    #[error("target qubit {target} out of range for a {n_qubits}-qubit register")]
    TargetOutOfRange { target: usize, n_qubits: usize },

    /// A step inside a sequence failed; `index` is the zero-based position of
    /// the first offending step.
    #[error("step {index}: {source}")]
    InvalidStep {
        index: usize,
        #[source]
        source: Box<QubusError>,
    },

    /// Matrix/vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A sequence file failed to parse; `line` is one-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The Fock-space truncation is too small for the requested amplitude.
    #[error("Fock truncation too small: need n_max >= {required}, got {given}")]
    Truncation { required: usize, given: usize },

    /// The adaptive integrator failed (step underflow, trace leak, ...).
    #[error("integration failure: {0}")]
    Integration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QubusError>;
