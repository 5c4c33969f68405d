use thiserror::Error;

/// Errors produced by the library and mapped to CLI exit codes in `main`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: d must be an integer >= 2")]
    InvalidDimension(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unbalanced transport instance: row sum {row_sum} vs column sum {col_sum}")]
    Unbalanced { row_sum: f64, col_sum: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("scene validation: {0}")]
    Scene(String),

    #[error("trapped ray: exceeded {0} bounces")]
    TrappedRay(usize),

    #[error("singular hit within {0:e} of a polygon vertex")]
    SingularHit(f64),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("scene file parse: {0}")]
    SceneParse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 validation, 2 solver, 3 verification, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::SceneParse(_) => 4,
            Error::Verification(_) => 3,
            Error::Solver(_) | Error::TrappedRay(_) => 2,
            _ => 1,
        }
    }
}
