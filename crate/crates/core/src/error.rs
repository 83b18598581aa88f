use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: line {line}{}: {message}", column.as_ref().map(|c| format!(", column `{c}`")).unwrap_or_default())]
    Parse {
        path: String,
        line: u64,
        column: Option<String>,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("design columns `{first}` and `{second}` are not orthogonal (inner product {dot})")]
    NonOrthogonal {
        first: String,
        second: String,
        dot: i64,
    },

    /// The residual level left for the newest term was not positive. In exact
    /// arithmetic it always is, so this means the replicate count is too small.
    #[error(
        "{method}: no level budget left at m = {m} (alpha = {alpha}, earlier terms {terms:?} \
         leave {residual:.6}); increase the replicate count"
    )]
    BudgetExhausted {
        method: String,
        m: usize,
        alpha: f64,
        terms: Vec<(usize, f64)>,
        residual: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("resource exhaustion: {0}")]
    Resource(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for numerical or solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExhausted { .. } | Error::Numerical(_) | Error::Resource(_) => 3,
            _ => 2,
        }
    }
}
