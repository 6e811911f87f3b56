//! Stuff/object/part stream mathematics: target remapping, masked losses with
//! analytic gradients, objectness-gated fusion and hierarchical output.

mod fusion;
mod loss;
mod streams;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::maskio::MaskIoError;
use crate::taxonomy::LabelId;

pub use fusion::{
    fuse_scene, hierarchical_output, objectness, segment_parts, PartSegmentation, DEFAULT_PART_THRESHOLD,
};
pub use loss::{
    masked_cross_entropy, total_loss, CascadeInputs, CrossEntropy, LossReport, PartStreamInput, StreamGradients,
};
pub use streams::{parse_stream_spec, StreamSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CascadeError {
    #[error("invalid stream spec: {0}")]
    Spec(String),
    #[error("stream spec line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{stream} stream has {found} channels, expected {expected}")]
    Channels {
        stream: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("target channel {target} at pixel {pixel} is outside 0..{channels}")]
    TargetOutOfRange {
        pixel: usize,
        target: usize,
        channels: usize,
    },
    #[error("{0} scores are not normalized")]
    NotNormalized(&'static str),
    #[error("object stream scores are required when the spec has object classes")]
    MissingObjectScores,
    #[error("part scores for object {0}: {1}")]
    PartScores(LabelId, String),
}

impl From<MaskIoError> for CascadeError {
    fn from(e: MaskIoError) -> Self {
        CascadeError::Shape(e.to_string())
    }
}

/// Inference-time merge of the stuff and object streams.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FusionMode {
    /// Object argmax wherever the stuff-stream argmax is the foreground class.
    #[default]
    Hard,
    /// Global argmax over stuff scores and objectness-weighted object scores.
    Soft,
}

impl FusionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionMode::Hard => "hard",
            FusionMode::Soft => "soft",
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hard" => Ok(FusionMode::Hard),
            "soft" => Ok(FusionMode::Soft),
            other => Err(format!("unknown fusion mode `{other}` (expected hard or soft)")),
        }
    }
}
