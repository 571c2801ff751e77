use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unknown built-in problem `{name}`; available: {available}")]
    UnknownBuiltin { name: String, available: String },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value from {function} at {input}")]
    NonFinite { function: String, input: String },

    #[error("invalid control: {0}")]
    InvalidControl(String),

    #[error("perturbation weight {0} is outside [0, 1]")]
    InvalidTheta(f64),

    #[error("refinement {requested} cannot represent every positive weight; at least {minimum} sub-steps per cell are needed")]
    ChatteringTooCoarse { requested: usize, minimum: usize },

    #[error("state blew up on path {path} at step {step}")]
    BlowUp { path: usize, step: usize },

    #[error("rank-deficient regression at step {step} (basis size {basis_size}, {paths} paths); reduce the basis degree or add paths")]
    RankDeficient {
        step: usize,
        basis_size: usize,
        paths: usize,
    },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
