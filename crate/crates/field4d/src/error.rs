//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point landed on or behind the camera's principal plane.
    #[error("point has non-positive depth in the camera frame")]
    NonPositiveDepth,

    /// Geometry too degenerate to solve (zero baseline, collinear
    /// points, rank-deficient system).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("need at least {needed} correspondences, found {found}")]
    InsufficientCorrespondences { found: usize, needed: usize },

    #[error("factor references variable {0:?} with no assigned value")]
    MissingVariable(crate::factorgraph::VariableKey),

    /// Damped normal equations remained unsolvable at maximum damping.
    #[error("singular normal equations")]
    SingularSystem,

    /// A connected component of the graph has no absolute factor.
    #[error("graph gauge is not fixed: a connected component has no prior-like factor")]
    GaugeNotFixed,

    #[error("preintegration window contains no samples")]
    EmptyWindow,

    #[error("timestamps are not strictly increasing")]
    NonMonotoneTime,

    #[error("measurement timestamp lies outside the bracketing states")]
    TimestampOutsideBracket,

    /// Tracks must span more than six images to be accepted.
    #[error("track spans only {images} images; more than 6 are required")]
    TrackTooShort { images: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no ground plane could be estimated for the site")]
    NoGroundPlane,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
