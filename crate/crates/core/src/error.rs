use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid potential: {0}")]
    Potential(String),

    #[error("spin weight is not positive: w({alpha}) = {value}")]
    NotPositiveDefinite { alpha: f64, value: f64 },

    #[error("coefficient c_{n} = {value:e} is negative: not positive definite as a height dual")]
    NegativeCoefficient { n: usize, value: f64 },

    #[error("potential `{0}` carries no inverse-temperature scale and cannot be split")]
    NotScalable(String),

    #[error("oracle budget exceeded: {states:e} states for budget {budget} (raise it with --budget)")]
    Budget { states: f64, budget: u64 },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
