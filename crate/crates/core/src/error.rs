use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Evaluation at (or too close to) an excluded locus of a field model.
    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("degenerate mass matrix: {0}")]
    DegenerateMass(String),

    #[error("degenerate Poisson structure: {0}")]
    DegenerateStructure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no capture possible: {0}")]
    NoCapture(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),
}
