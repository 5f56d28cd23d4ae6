use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("stencil of width {h:e} reaches singular surface `{surface}` (distance {distance:e})")]
    PoleProximity {
        surface: String,
        distance: f64,
        h: f64,
    },

    #[error("nonlinearity is undefined at modulus {0}")]
    NonlinearityUndefined(f64),

    #[error("field value is not finite at t = {t}, x = {x:?}")]
    NonFinite { t: f64, x: Vec<f64> },

    #[error("fractional power u^{k} of nonpositive base {base}")]
    NonpositiveBase { base: f64, k: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unknown ansatz family `{0}`")]
    UnknownFamily(String),

    #[error("family {family} is not defined for n = {n}")]
    WrongDimension { family: String, n: usize },

    #[error("family {family} requires parameter `{name}`")]
    MissingParameter { family: String, name: String },

    #[error("family {family} does not take parameter `{name}`")]
    UnknownParameter { family: String, name: String },

    #[error("coincident poles {0:?}")]
    CoincidentPoles(Vec<f64>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not orthogonal (max |RᵀR − I| = {0:e})")]
    NonOrthogonal(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("every sample point was excluded")]
    EmptySample,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("samples are degenerate: basis matrix is rank deficient")]
    DegenerateSamples,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inconsistent reduction profile: {0}")]
    InconsistentProfile(String),

    #[error("integration blew up after ω = {last_good}")]
    BlowUp { last_good: f64 },

    #[error("ω = {value} lies outside the profile domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("bracket vanishes inside the domain at {0:?}; split the domain there")]
    DomainSplit(Vec<f64>),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
