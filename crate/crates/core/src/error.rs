use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate `{coord}` = {value} outside [{lo}, {hi}]")]
    OutOfBounds {
        coord: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("point {coords:?} lies in excluded region {region}")]
    Excluded { region: String, coords: Vec<f64> },

    #[error("objects live on different charts ({0} vs {1})")]
    ChartMismatch(String, String),

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("singular linear system at {at:?}: {what}")]
    SingularSystem { what: String, at: Vec<f64> },

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("trajectory left the chart domain at t = {t}: {reason}")]
    LeftDomain { t: f64, reason: String },

    #[error("rank-deficient differential at {at:?}")]
    RankDeficient { at: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("monodromy moves mesh points by up to {max_displacement:.3e} (tolerance {tol:.1e})")]
    MonodromyNotIdentity { max_displacement: f64, tol: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid override `{key}`; valid keys: {valid}")]
    InvalidOverride { key: String, valid: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
