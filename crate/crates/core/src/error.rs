use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("filter diverged at t={t}: every particle assigns zero predictive density ({summary})")]
    FilterDivergence { t: usize, summary: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("at t={t}: {source}")]
    AtStep {
        t: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::ParameterDomain(msg.into())
    }
}
