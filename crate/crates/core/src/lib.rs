//! Interactive GrowCut segmentation of CT volumes and the evaluation
//! machinery around it: NRRD volume I/O, contour-derived ground truth,
//! Dice/Hausdorff metrics, paired statistics and batch reports.

pub mod contours;
pub mod growcut;
pub mod metrics;
pub mod nrrd;
pub mod phantom;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod volume;

pub use growcut::{segment, GrowCutParams, SeedLabel, SeedSet, Segmentation, Stroke, StrokeSet};
pub use metrics::CaseMetrics;
pub use volume::{Dims, LabelGrid, Plane, SliceImage, Spacing, VolumeGrid};
