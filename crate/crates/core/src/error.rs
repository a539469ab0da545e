use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("points are colinear; circumcenter undefined")]
    DegenerateTriple,

    #[error("coefficients do not come from a consistent ensemble (relative deviation {deviation:e})")]
    InconsistentCoefficients { deviation: f64 },

    #[error("regularity Gram matrix is rank deficient (singular value ratio {ratio:e})")]
    RankDeficiency { ratio: f64 },

    #[error("filter row structure violated (deviation {deviation:e})")]
    StructureViolation { deviation: f64 },

    #[error("cascade diverged at iteration {iteration} (max |phi| = {max_abs:e})")]
    Divergence { iteration: usize, max_abs: f64 },

    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("no instance was solved by every algorithm")]
    EmptySolvedByAll,

    #[error("ensemble size mismatch: expected M = {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
