//! Annotation rasters and their bit-exact file formats.

pub mod ade20k;
pub mod corpus;
mod netpbm;
mod raster;
mod scorefile;

use std::path::PathBuf;

use thiserror::Error;

use crate::taxonomy::LabelId;

pub use corpus::{AnnotationRecord, PartLevel};
pub use netpbm::{
    read_binary, read_gray16, read_instances, read_mask, read_mask_checked, read_ppm, write_binary,
    write_gray16, write_instances, write_mask, write_ppm,
};
pub use raster::{
    check_instances, ensure_same_dims, BinaryMask, Grid, InstanceMap, LabelMask, RgbImage, ScoreMap,
    NORMALIZATION_TOLERANCE,
};
pub use scorefile::{read_scoremap, write_scoremap, SCORE_MAGIC};

#[derive(Debug, Error)]
pub enum MaskIoError {
    #[error("malformed header at byte {offset}: {message}")]
    Header { offset: usize, message: String },
    #[error("unsupported maxval {found} at byte {offset}")]
    MaxVal { offset: usize, found: u32 },
    #[error("payload truncated at byte {offset}: expected {expected} bytes, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("{extra} trailing bytes after payload end at byte {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("non-finite score at flat index {index}")]
    NonFinite { index: usize },
    #[error("label {label} at flat index {index} is outside the dictionary (size {limit})")]
    LabelOutOfRange {
        index: usize,
        label: LabelId,
        limit: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{}: {message}", path.display())]
    Decode { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<MaskIoError>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MaskIoError {
    /// True for failures of the file system rather than of the data.
    pub fn is_io(&self) -> bool {
        match self {
            MaskIoError::Io { .. } => true,
            MaskIoError::InFile { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
