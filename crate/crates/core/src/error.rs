use std::fmt;

/// Errors raised anywhere in the design pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("variable count {0} is outside the supported range")]
    VariableCount(usize),

    #[error("truth table for n = {n} needs {expected} entries, got {got}")]
    TruthTableLength { n: usize, expected: usize, got: usize },

    #[error("invalid hex truth table: {0}")]
    Hex(String),

    #[error("operation requires an even variable count, got n = {0}")]
    OddVariables(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("assignment has {got} spins, model expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("spin layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("embedding: {0}")]
    Embedding(String),

    #[error("model has {0} spins, exact enumeration is limited to {max}", max = crate::sampler::MAX_EXACT_SPINS)]
    TooManySpins(usize),

    #[error("exhaustive enumeration is limited to n <= 4, got n = {0}")]
    OracleBound(usize),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("[{stage}] {inner}")]
    Stage { stage: Stage, inner: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage attached to errors surfaced by the experiment runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Encode,
    Embed,
    Sample,
    Decode,
    Harvest,
    Persist,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Encode => "encode",
            Stage::Embed => "embed",
            Stage::Sample => "sample",
            Stage::Decode => "decode",
            Stage::Harvest => "harvest",
            Stage::Persist => "persist",
        };
        f.write_str(name)
    }
}

impl Error {
    /// Tags the error with `stage` unless it already carries one.
    pub fn at(self, stage: Stage) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, inner: Box::new(e) },
        }
    }

    /// Stage tag, if the error came out of the experiment runner.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
