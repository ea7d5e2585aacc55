//! Volume bias of overlap metrics under uniform segmentation errors.
//!
//! Label volumes are split into binary structure masks, perturbed by exact
//! Euclidean dilation and erosion, scored with DSC and normalized DSC, and
//! compared between two subject groups with Welch tests and
//! Benjamini–Hochberg adjustment.

pub mod error;
pub mod io;
pub mod metrics;
pub mod morphology;
pub mod phantom;
pub mod report;
pub mod simulate;
pub mod stats;
pub mod volume;

pub use error::{Error, Result};
pub use metrics::{confusion, dsc, kappa, ndsc, ConfusionCounts, ScaleFactor, Score};
pub use morphology::{dilate, erode, squared_edt, DistanceField, ErrorMargin};
pub use phantom::{default_reference_spec, generate_cohort, PhantomSpec};
pub use simulate::{
    run_cohort, FractionSource, Metric, MetricRecord, RecordFlags, ReferenceMode, SimulationConfig,
};
pub use stats::{
    analyze, AnalysisOptions, Aggregation, BhFamily, CategoryThresholds, GroupComparison, ScopeKind,
    SizeCategory,
};
pub use volume::{BinaryMask, Dims, LabelVolume, Spacing, VolumeCm3};
