use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("q-function kind {kind} is not defined for {family} marginals")]
    KindMarginalMismatch { kind: String, family: String },

    #[error("q-function does not satisfy the zero-mean condition (residual {residual:e}); wrap it in Repaired or construct with new_unchecked")]
    ZeroMeanViolated { residual: f64 },

    #[error("omega {omega} outside feasible interval [{lower}, {upper}]")]
    InfeasibleOmega { omega: f64, lower: f64, upper: f64 },

    #[error("repair impossible: {0}")]
    RepairImpossible(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unknown team: {0}")]
    UnknownTeam(String),

    #[error("parameter vector layout mismatch: expected length {expected}, got {got}")]
    Layout { expected: usize, got: usize },

    #[error("unknown model name {name:?}; valid names: {valid}")]
    UnknownModel { name: String, valid: String },

    #[error("fits were produced on different datasets and cannot be compared")]
    MixedDatasets,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error at line {line}: {msg}")]
    Validation { line: usize, msg: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unsupported model file version {found} (supported: {supported})")]
    VersionMismatch { found: String, supported: u32 },

    #[error("malformed model file: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
