use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("segmentation infeasible: plane-wave validity needs at least {n_min} segments but the wavelength limit allows at most {n_max}")]
    SegmentationInfeasible { n_min: usize, n_max: usize },

    #[error("{shape} cannot be split into a uniform grid of primitives")]
    Unsegmentable { shape: &'static str },

    #[error("segment {segment} violates the far-field criterion (min distance {distance_m:.3} m, needs > {required_m:.3} m)")]
    FarFieldViolation {
        segment: usize,
        distance_m: f64,
        required_m: f64,
    },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
