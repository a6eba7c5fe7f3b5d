use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// A transition probability computed from the model fell outside [0, 1].
    #[error("model inconsistency at P[{from},{to}] = {value}: {detail}")]
    ModelInconsistency {
        from: usize,
        to: usize,
        value: f64,
        detail: String,
    },

    /// The chain has more than one closed communicating class, so the
    /// stationary vector is not unique.
    #[error("degenerate chain: {} recurrent classes {classes:?}", classes.len())]
    DegenerateChain { classes: Vec<Vec<usize>> },

    #[error("no convergence after {iterations} iterations (last iterates {trace:?})")]
    IterationLimit { iterations: usize, trace: Vec<f64> },

    #[error("numeric inconsistency: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
