use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed arguments outside an operation's domain.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("could not generate a connected instance (n={n}, d={d}, alpha={alpha}, policy={policy}, seed={seed}) after {retries} retries")]
    Generation {
        n: usize,
        d: usize,
        alpha: f64,
        policy: String,
        seed: u64,
        retries: usize,
    },

    /// The input graph breaks an assumption of the quasi unit ball graph model.
    #[error("model violation: {0}")]
    ModelViolation(String),

    /// An internal invariant of the construction did not hold.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("simulation exceeded {max_rounds} rounds (at round {round})")]
    Divergence { max_rounds: u64, round: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
