use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate landmark configuration: numerical rank {rank} < {expected}")]
    DegenerateConfig { rank: usize, expected: usize },

    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sample {id}: {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trajectory needs at least 2 points, got {0}")]
    TooShort(usize),

    #[error("could not reach target length {target} (closest {reached})")]
    UnreachableLength { target: usize, reached: usize },

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("part {part:?} has {size} landmarks, needs at least {required}")]
    PartTooSmall {
        part: String,
        size: usize,
        required: usize,
    },

    #[error("invalid part schema: {0}")]
    InvalidSchema(String),

    #[error("missing probabilities for part {0:?}")]
    MissingPart(String),

    #[error("protocol infeasible: {0}")]
    ProtocolInfeasible(String),

    #[error("{path}: parse error at {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("{path}: shape error in frame {frame}: {message}")]
    Shape {
        path: PathBuf,
        frame: usize,
        message: String,
    },

    #[error("{path}: non-finite coordinate in frame {frame}, landmark {landmark}")]
    NonFinite {
        path: PathBuf,
        frame: usize,
        landmark: usize,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn at_frame(self, frame: usize) -> Self {
        Error::Frame {
            frame,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_sample(self, id: &str) -> Self {
        Error::Sample {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error, looking through frame annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Frame { source, .. } | Error::Sample { source, .. } => source.root(),
            other => other,
        }
    }
}
