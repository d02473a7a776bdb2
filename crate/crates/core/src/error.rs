use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("operator has no transpose applicator")]
    MissingTranspose,
    #[error("operator is not in M(H0,H1): {0}")]
    NotInM(String),
    #[error("coercivity violated: {0}")]
    Coercivity(String),
    #[error("right-hand side is not compatible: {0}")]
    Compatibility(String),
    #[error("solver failed: {0}")]
    SolverDiverged(String),
    #[error("vector is not mean-free (mean {0:e})")]
    NonMeanFree(f64),
    #[error("harmonic mean of the coefficient vanishes")]
    VanishingHarmonicMean,
    #[error("operator is not skew-adjoint (defect {0:e})")]
    NotSkew(f64),
    #[error("resolvent is singular")]
    SingularResolvent,
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("mesh rule violated: {0}")]
    MeshRuleViolation(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
