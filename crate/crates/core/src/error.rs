use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is behind the camera (depth {depth})")]
    PointBehindCamera { depth: f64 },

    #[error("back-projected rays are degenerate (condition {condition:e})")]
    DegenerateRays { condition: f64 },

    #[error("camera centers coincide")]
    DegenerateRig,

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("covariance could not be factorized: {0}")]
    FactorizationFailure(String),

    #[error("all particle weights are zero")]
    AllZeroWeights,

    #[error("patch dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),

    #[error("warm-up not complete ({remaining} frames remaining)")]
    WarmupPending { remaining: usize },

    #[error("at least {needed} frames are required, got {got}")]
    InsufficientFrames { needed: usize, got: usize },

    #[error("no calibration for view {0}")]
    CalibrationMissing(u32),

    #[error("object {object} is outside view {view} at frame {frame}")]
    ObjectOutOfView { object: usize, view: u32, frame: u32 },

    #[error("no matched instants")]
    NoMatches,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PointBehindCamera { .. }
                | Error::DegenerateRays { .. }
                | Error::SingularInnovation
                | Error::FactorizationFailure(_)
                | Error::AllZeroWeights
                | Error::WarmupPending { .. }
                | Error::NoMatches
        )
    }
}
