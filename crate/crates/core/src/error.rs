use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid growth function: {0}")]
    InvalidGrowth(String),
    #[error("unsupported modulus: no admissible type n <= {cap}")]
    UnsupportedModulus { cap: u32 },
    #[error("argument {0} outside (0, 1]")]
    OutOfDomain(f64),
    #[error("ill-conditioned cube: {0}")]
    IllConditioned(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no admissible cube for the requested seminorm")]
    NoAdmissibleCube,
    #[error("covering inconsistency: {0}")]
    Covering(String),
    #[error("covering defect: {0}")]
    CoveringDefect(String),
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("kernel singularity: {0}")]
    Singular(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
