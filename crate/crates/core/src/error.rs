use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{file}:{line}: {msg}")]
    ParseAt { file: String, line: usize, msg: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("d = {0} is not a Euclidean imaginary quadratic ring")]
    NotEuclidean(u32),
    #[error("invalid ring parameter d = {0}")]
    BadParams(u32),
    #[error("zero vector has no gcd")]
    ZeroVector,
    #[error("gcd(0, 0) is undefined")]
    ZeroGcd,
    #[error("matrix {0} is not unitary for J")]
    NotUnitary(String),
    #[error("matrix is not in the cusp stabilizer: {0}")]
    NotInCuspGroup(String),
    #[error("non-negative self product")]
    NotNegative,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 for verification failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Verification(_) | Error::NotUnitary(_) | Error::NotInCuspGroup(_) => 1,
            _ => 2,
        }
    }
}
