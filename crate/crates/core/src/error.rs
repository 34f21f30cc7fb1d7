use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not conform.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A result would not fit in the platform's index type.
    #[error("size overflow: {0}")]
    Size(String),

    /// An iterative kernel failed to converge, or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Key generation could not draw a factor of full numerical rank.
    #[error("no full-rank {size}x{size} binary factor with p = {p} after {attempts} draws")]
    FullRank { size: usize, p: f64, attempts: usize },

    /// Encryption variant outside 1..=4.
    #[error("invalid variant {0}, expected 1..=4")]
    InvalidVariant(i64),

    /// Malformed file contents. `offset` is the byte position of the problem.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    /// A value parsed fine but breaks a domain invariant.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// The factored and full reconstruction paths disagreed during benchmarking.
    #[error("factored and full reconstructions disagree: relative difference {0:.3e}")]
    Agreement(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 for file and format problems, 3 for shape and invariant problems,
    /// 4 for numerical failures. Usage errors (1) never reach this type.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Format { .. } => 2,
            Error::Dimension(_) | Error::Size(_) | Error::Invariant(_) | Error::InvalidVariant(_) => 3,
            Error::Numerical(_) | Error::FullRank { .. } | Error::Agreement(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
