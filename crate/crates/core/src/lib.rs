//! Scene parsing benchmark toolkit.
//!
//! Label taxonomy, annotation rasters, evaluation metrics, annotation
//! consistency, corpus statistics, stuff/object/part cascade fusion, and the
//! synthetic corpus generator used to check all of them.

pub mod applications;
pub mod cascade;
pub mod consistency;
pub mod datastats;
pub mod json;
pub mod maskio;
pub mod metrics;
pub mod taxonomy;

pub use maskio::{BinaryMask, Grid, InstanceMap, LabelMask, MaskIoError, RgbImage, ScoreMap};
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use taxonomy::{LabelId, LabelRemap, MacroClass, Taxonomy};

/// Version echoed into every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema version of the JSON reports.
pub const SCHEMA_VERSION: &str = "1";
