use std::path::PathBuf;

use crate::factor_model::FactorId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{factor} value {value} lies in no class region")]
    OutOfClass { factor: FactorId, value: String },

    #[error("{factor} value {value} lies in more than one class region")]
    AmbiguousClass { factor: FactorId, value: String },

    #[error("region/value type mismatch: {region} cannot hold {value}")]
    TypeMismatch { region: &'static str, value: &'static str },

    #[error("{path}: parse error at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("empty mask after threshold (image {index})")]
    EmptyMask { index: usize },

    #[error("failed to load texture `{name}` from {path}: {message}")]
    TextureLoad {
        name: String,
        path: PathBuf,
        message: String,
    },

    #[error("crop of side {size} does not fit a {width}x{height} texture")]
    Crop { size: usize, width: usize, height: usize },

    #[error("object of side {side} cannot be placed inside a {image_side}x{image_side} image")]
    Placement { side: usize, image_side: usize },

    #[error("study definition error: {0}")]
    StudyDefinition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid predictions:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("target class {0} has no test records")]
    UndefinedClass(u8),

    #[error("training diverged at epoch {epoch} (last stable epoch: {last_stable:?})")]
    Divergence { epoch: usize, last_stable: Option<usize> },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
