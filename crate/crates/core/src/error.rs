use thiserror::Error;

/// Errors raised across the crate.
///
/// `Validation` covers bad user input (scenario files, parameters outside the
/// admissible range); `Defect` is reserved for a run that contradicts a
/// proven guarantee, which signals a bug rather than bad input.
#[derive(Debug, Error)]
pub enum FlockError {
    #[error("vertex index {index} out of range for digraph with {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("digraph has no spanning tree")]
    NoSpanningTree,

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("stability gate violated: kappa*h = {kappa_h} must lie in (0, 1/n_infinity = {limit})")]
    StabilityGate { kappa_h: f64, limit: f64 },

    #[error("delay profile is not integer-valued: {0}")]
    NotIntegerValued(String),

    #[error("weight function is not admissible: {0}")]
    InadmissibleWeight(String),

    #[error("lookup at t = {t} outside the covered interval [{start}, {end}]")]
    LookupOutOfRange { t: f64, start: f64, end: f64 },

    #[error("divergence detected at t = {t}: |v| = {magnitude} exceeds guard {limit}")]
    Divergence { t: f64, magnitude: f64, limit: f64 },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("certificate does not guarantee flocking")]
    NotCertified,

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("theorem violation: {0}")]
    Defect(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, FlockError>;

impl FlockError {
    /// True for errors caused by invalid input rather than a failing run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            FlockError::IndexOutOfRange { .. }
                | FlockError::SelfLoop(_)
                | FlockError::InvalidParameter(_)
                | FlockError::NoSpanningTree
                | FlockError::Degenerate(_)
                | FlockError::StabilityGate { .. }
                | FlockError::NotIntegerValued(_)
                | FlockError::InadmissibleWeight(_)
                | FlockError::Validation(_)
                | FlockError::Parse(_)
        )
    }
}
