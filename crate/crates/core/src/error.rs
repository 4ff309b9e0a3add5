use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state or intermediate stage became NaN/Inf.
    #[error("orbit diverged at sample {sample}: non-finite state")]
    Diverged { sample: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("sequence length {got} does not match delay count {expected}")]
    SequenceLength { expected: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("delay map is singular at x[t-2] = {0}")]
    SingularDelayMap(f64),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    DivergedTraining { epoch: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no validation data")]
    NoValidation,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by numerical blow-up rather than bad input.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. } | Error::DivergedTraining { .. }
        )
    }
}
