//! Persistence: label volumes, cohort manifests and result tables.

mod manifest;
mod nifti;
mod rlv;
mod tables;

use std::path::Path;

pub use manifest::{read_manifest, write_manifest, CohortManifest, ManifestEntry, ManifestMetadata};
pub use nifti::{read_nifti_labels, write_nifti_labels};
pub use rlv::{payload_path, read_rlv, write_rlv, Dtype, RlvHeader};
pub(crate) use tables::lenient_f64;
pub use tables::{
    format_g17, read_comparisons_table, read_metrics_table, write_comparisons_table,
    write_metrics_table, TableFormat, COMPARISON_COLUMNS, METRIC_COLUMNS,
};

use crate::error::{Error, Result};
use crate::volume::LabelVolume;

/// Reads a label volume, choosing the format from the file name
/// (`.rlv.json`, `.nii`, `.nii.gz`, `.hdr`).
pub fn read_label_volume(path: &Path) -> Result<LabelVolume> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    if name.ends_with(rlv::HEADER_SUFFIX) {
        read_rlv(path)
    } else if name.ends_with(".nii")
        || name.ends_with(".nii.gz")
        || name.ends_with(".hdr")
        || name.ends_with(".hdr.gz")
    {
        read_nifti_labels(path)
    } else {
        Err(Error::format(path, "unrecognized volume file extension"))
    }
}
