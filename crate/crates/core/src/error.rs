use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible homogenization target: harmonic mean {omega1} exceeds arithmetic mean {omega2}")]
    InfeasibleTarget { omega1: f64, omega2: f64 },

    #[error("E = {energy} is a Dirichlet eigenvalue of mode l = {l}")]
    AtDirichletEigenvalue { l: usize, energy: f64 },

    #[error("outgoing-wave resonance hit at real energy {energy} for l = {l}")]
    ResonanceHit { l: usize, energy: f64 },

    #[error("singular profile: {0}")]
    SingularProfile(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
