//! Content removal driven by object score maps, diffusion inpainting, and
//! the synthetic scene generator used as a statistical oracle.

mod inpaint;
mod removal;
mod synth;

use thiserror::Error;

use crate::taxonomy::LabelId;

pub use inpaint::{inpaint, Inpainted, CONVERGENCE_DELTA, DEFAULT_INPAINT_ITERATIONS};
pub use removal::{dilate, removal_mask, RemovalRequest, DEFAULT_DILATION_RADIUS, DEFAULT_REMOVAL_THRESHOLD};
pub use synth::{synth_generate, Manifest, ManifestImage, SceneGenerator, SyntheticScene, SyntheticSpec, CELL};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ApplicationError {
    #[error("invalid removal request: {0}")]
    InvalidRequest(String),
    #[error("target label {0} has no score channel")]
    UnknownTarget(LabelId),
    #[error("object scores are not normalized")]
    NotNormalized,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("the hole covers the whole image")]
    HoleCoversImage,
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
}
