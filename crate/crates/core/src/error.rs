use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid specification {spec:?}: {reason}")]
    InvalidSpec { spec: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bound not applicable: {0}")]
    BoundInapplicable(String),

    #[error(
        "stepping-out exceeded {cap} expansions; the geodesic level set looks unbounded \
         (m = inf requires a finite lambda)"
    )]
    ExpansionCap { cap: u64 },

    #[error("shrinkage exceeded {cap} iterations; the level set has negligible measure on this geodesic")]
    ShrinkCap { cap: u64 },

    #[error("transition failed at x = {x:?}, v = {v:?}, level = {level}: {source}")]
    Step {
        x: Vec<f64>,
        v: Vec<f64>,
        level: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("random number generator produced 64 degenerate tangent draws in a row")]
    BrokenRng,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn spec(spec: &str, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            spec: spec.to_string(),
            reason: reason.into(),
        }
    }
}
