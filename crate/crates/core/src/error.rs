use alloc::string::String;

/// Errors raised anywhere in the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TelecodeError {
    #[error("code distance must be at least 2, got {0}")]
    InvalidDistance(usize),

    #[error("{name} = {value} is outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("dense oracle supports d <= {max}, got d = {d}")]
    OracleTooLarge { d: usize, max: usize },

    #[error("outcome vector has {got} entries, lattice has {expected} qubits")]
    OutcomeLength { expected: usize, got: usize },

    #[error("outcome entries must be +1 or -1, found {0}")]
    OutcomeValue(i8),

    #[error(
        "bond dimension overflow in row {row} at chain bond {bond}: \
         needs {needed} > chi_max {chi_max}, discarded weight {discarded:e}"
    )]
    BondOverflow {
        row: usize,
        bond: usize,
        needed: usize,
        chi_max: usize,
        discarded: f64,
    },

    #[error("non-finite value produced in row {row} ({context})")]
    NonFinite { row: usize, context: &'static str },

    #[error("configuration has zero weight (vanished in row {row})")]
    ZeroWeight { row: usize },

    #[error("gate dimension mismatch: expected local dimension {expected}, got {got}")]
    GateDimension { expected: usize, got: usize },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(&'static str),

    #[error("records mix incompatible parameters: {0}")]
    MixedParams(String),

    #[error("scaling analysis failed: {0}")]
    Scaling(String),

    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

pub type Result<T> = core::result::Result<T, TelecodeError>;
