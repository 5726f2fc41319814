use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite function value {value} at node x = {node}")]
    Evaluation { node: f64, value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("truncation tail mass {tail_mass:.3e} at L = {half_width} exceeds {limit:.1e}; use a larger half-width")]
    Truncation {
        half_width: f64,
        tail_mass: f64,
        limit: f64,
    },

    #[error("basis lost orthogonality (Gram deviation {deviation:.3e} at degree {degree}); use more quadrature nodes")]
    Resolution { degree: usize, deviation: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("particle {index} blew up at t = {time}")]
    BlowUp { time: f64, index: usize },

    #[error("scheme error: {0}")]
    Scheme(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
