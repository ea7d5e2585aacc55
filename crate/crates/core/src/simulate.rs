//! Uniform-margin error simulation over a cohort.
//!
//! Pass 1 loads each subject, resamples it to the target spacing and, for every
//! configured structure and margin, records the confusion counts of the
//! dilated (over-segmented) and eroded (under-segmented) masks against the
//! reference. Pass 2 computes the reference fraction of every
//! structure/group cell and fills in the normalized DSC.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, CohortManifest};
use crate::metrics::{self, ConfusionCounts, Score};
use crate::morphology::{self, ErrorMargin};
use crate::volume::{self, BinaryMask, Fraction, LabelVolume, Spacing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Dsc,
    Ndsc,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Dsc => "dsc",
            Metric::Ndsc => "ndsc",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Metric::Dsc => "DSC",
            Metric::Ndsc => "nDSC",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dsc" => Ok(Metric::Dsc),
            "ndsc" => Ok(Metric::Ndsc),
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecordFlags {
    pub missing: bool,
    pub annihilated_erosion: bool,
    pub boundary_clipped: bool,
}

impl RecordFlags {
    const NAMES: [&'static str; 3] = ["missing", "annihilated_erosion", "boundary_clipped"];

    /// `;`-joined list of the set flags, empty when none is set.
    pub fn encode(&self) -> String {
        let set = [self.missing, self.annihilated_erosion, self.boundary_clipped];
        Self::NAMES
            .iter()
            .zip(set)
            .filter(|(_, on)| *on)
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn decode(s: &str) -> Result<Self> {
        let mut f = RecordFlags::default();
        for part in s.split(';').filter(|p| !p.is_empty()) {
            match part {
                "missing" => f.missing = true,
                "annihilated_erosion" => f.annihilated_erosion = true,
                "boundary_clipped" => f.boundary_clipped = true,
                other => return Err(Error::Config(format!("unknown record flag '{other}'"))),
            }
        }
        Ok(f)
    }
}

/// One (subject, structure, margin) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub subject_id: String,
    pub group: String,
    pub structure: String,
    pub margin_mm: f64,
    pub volume_cm3: f64,
    pub fraction_h: f64,
    pub dil_counts: Option<ConfusionCounts>,
    pub ero_counts: Option<ConfusionCounts>,
    pub dsc_dil: Option<f64>,
    pub dsc_ero: Option<f64>,
    pub dsc_avg: Option<f64>,
    pub ndsc_dil: Option<f64>,
    pub ndsc_ero: Option<f64>,
    pub ndsc_avg: Option<f64>,
    pub flags: RecordFlags,
}

impl MetricRecord {
    /// Dilation/erosion-averaged score of `metric`, absent for missing structures.
    pub fn score(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Dsc => self.dsc_avg,
            Metric::Ndsc => self.ndsc_avg,
        }
    }

    fn missing(subject_id: &str, group: &str, structure: &str, margin_mm: f64) -> Self {
        MetricRecord {
            subject_id: subject_id.to_string(),
            group: group.to_string(),
            structure: structure.to_string(),
            margin_mm,
            volume_cm3: 0.0,
            fraction_h: 0.0,
            dil_counts: None,
            ero_counts: None,
            dsc_dil: None,
            dsc_ero: None,
            dsc_avg: None,
            ndsc_dil: None,
            ndsc_ero: None,
            ndsc_avg: None,
            flags: RecordFlags {
                missing: true,
                ..Default::default()
            },
        }
    }

    fn sort_key_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.structure
            .cmp(&other.structure)
            .then_with(|| self.subject_id.cmp(&other.subject_id))
            .then_with(|| self.margin_mm.total_cmp(&other.margin_mm))
    }
}

/// Which cell supplies the nDSC reference fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// Mean over the subject's (structure, group) cell.
    #[default]
    PerGroup,
    /// Mean over the structure, both groups together.
    Pooled,
}

/// Grid on which the positive-class fraction is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FractionSource {
    /// The resampled, target-spacing grid.
    #[default]
    Resampled,
    /// The volume as stored, before resampling.
    Native,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub target_spacing: Spacing,
    pub margins_mm: Vec<f64>,
    /// Label id to structure name. `None` uses the manifest's label map.
    pub labels: Option<BTreeMap<u16, String>>,
    pub reference_mode: ReferenceMode,
    pub fraction_source: FractionSource,
    /// Worker threads; 0 picks the hardware parallelism.
    pub threads: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            target_spacing: Spacing::isotropic(1.0).expect("1 mm is valid"),
            margins_mm: vec![1.0, 3.0],
            labels: None,
            reference_mode: ReferenceMode::default(),
            fraction_source: FractionSource::default(),
            threads: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<Vec<ErrorMargin>> {
        if self.margins_mm.is_empty() {
            return Err(Error::Config("at least one margin is required".into()));
        }
        let margins = self
            .margins_mm
            .iter()
            .map(|&m| ErrorMargin::new(m))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = BTreeSet::new();
        if let Some(labels) = &self.labels {
            if labels.contains_key(&0) {
                return Err(Error::Config("label 0 is background".into()));
            }
            for name in labels.values() {
                if !seen.insert(name) {
                    return Err(Error::Config(format!("structure name '{name}' used twice")));
                }
            }
        }
        Ok(margins)
    }
}

/// Confusion counts of one structure under one margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureErrors {
    pub dil_counts: ConfusionCounts,
    pub ero_counts: ConfusionCounts,
    pub annihilated_erosion: bool,
}

/// Applies dilation and erosion independently to a padded reference mask.
pub fn simulate_structure(mask: &BinaryMask, margin: ErrorMargin) -> Result<StructureErrors> {
    let dilated = morphology::dilate(mask, margin)?;
    let eroded = morphology::erode(mask, margin)?;
    Ok(StructureErrors {
        dil_counts: metrics::confusion(mask, &dilated)?,
        ero_counts: metrics::confusion(mask, &eroded)?,
        annihilated_erosion: eroded.is_empty(),
    })
}

/// Arithmetic mean of the two error-type scores; absent if either is.
pub fn average_error_pair(a: Option<Score>, b: Option<Score>) -> Option<Score> {
    Some(Score((a?.0 + b?.0) / 2.0))
}

/// Structure to simulate within one subject.
#[derive(Debug, Clone)]
pub struct StructureSpec {
    pub label: u16,
    pub name: String,
}

/// Pass 1 for one subject already in memory. nDSC fields stay empty.
pub fn simulate_subject(
    subject_id: &str,
    group: &str,
    volume: &LabelVolume,
    structures: &[StructureSpec],
    config: &SimulationConfig,
) -> Result<Vec<MetricRecord>> {
    let margins = config.validate()?;
    let resampled = volume::resample_nearest(volume, config.target_spacing);
    let mut out = Vec::with_capacity(structures.len() * margins.len());
    for s in structures {
        let mask = volume::extract_binary_mask(&resampled, s.label);
        if mask.is_empty() {
            out.extend(
                margins
                    .iter()
                    .map(|m| MetricRecord::missing(subject_id, group, &s.name, m.mm())),
            );
            continue;
        }
        let volume_cm3 = volume::mask_volume_cm3(&mask).0;
        let fraction_h = match config.fraction_source {
            FractionSource::Resampled => volume::positive_fraction(&mask).value(),
            FractionSource::Native => {
                volume::positive_fraction(&volume::extract_binary_mask(volume, s.label)).value()
            }
        };
        let boundary_clipped = mask.touches_boundary();
        if boundary_clipped {
            log::warn!(
                "subject '{subject_id}', structure '{}': foreground touches the volume boundary",
                s.name
            );
        }
        for &margin in &margins {
            let pad = margin
                .headroom_voxels(resampled.spacing())
                .into_iter()
                .max()
                .unwrap_or(0)
                + 1;
            let padded = volume::crop_to_foreground(&mask, pad).expect("mask is nonempty");
            let e = simulate_structure(&padded, margin)?;
            let dsc_dil = metrics::dsc(e.dil_counts);
            let dsc_ero = metrics::dsc(e.ero_counts);
            out.push(MetricRecord {
                subject_id: subject_id.to_string(),
                group: group.to_string(),
                structure: s.name.clone(),
                margin_mm: margin.mm(),
                volume_cm3,
                fraction_h,
                dil_counts: Some(e.dil_counts),
                ero_counts: Some(e.ero_counts),
                dsc_dil: Some(dsc_dil.0),
                dsc_ero: Some(dsc_ero.0),
                dsc_avg: average_error_pair(Some(dsc_dil), Some(dsc_ero)).map(|s| s.0),
                ndsc_dil: None,
                ndsc_ero: None,
                ndsc_avg: None,
                flags: RecordFlags {
                    missing: false,
                    annihilated_erosion: e.annihilated_erosion,
                    boundary_clipped,
                },
            });
        }
    }
    Ok(out)
}

/// Pass 2: sorts the records and fills the nDSC fields from cell-mean fractions.
pub fn finalize_records(mut records: Vec<MetricRecord>, mode: ReferenceMode) -> Vec<MetricRecord> {
    records.sort_by(|a, b| a.sort_key_cmp(b));

    let cell_key = |r: &MetricRecord| {
        let group = match mode {
            ReferenceMode::PerGroup => r.group.clone(),
            ReferenceMode::Pooled => String::new(),
        };
        (r.structure.clone(), r.margin_mm.to_bits(), group)
    };
    let mut sums: BTreeMap<(String, u64, String), (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.flags.missing) {
        let e = sums.entry(cell_key(r)).or_default();
        e.0 += r.fraction_h;
        e.1 += 1;
    }

    for r in records.iter_mut().filter(|r| !r.flags.missing) {
        let (sum, n) = sums[&cell_key(r)];
        let rbar = sum / n as f64;
        let (Some(h), Some(rbar)) = (Fraction::new(r.fraction_h), Fraction::new(rbar)) else {
            continue;
        };
        let dil = r.dil_counts.map(|c| metrics::ndsc(c, h, rbar));
        let ero = r.ero_counts.map(|c| metrics::ndsc(c, h, rbar));
        match (dil, ero) {
            (Some(Ok(d)), Some(Ok(e))) => {
                r.ndsc_dil = Some(d.0);
                r.ndsc_ero = Some(e.0);
                r.ndsc_avg = average_error_pair(Some(d), Some(e)).map(|s| s.0);
            }
            _ => log::warn!(
                "subject '{}', structure '{}': degenerate fraction, nDSC left empty",
                r.subject_id,
                r.structure
            ),
        }
    }
    records
}

/// Output of [`run_cohort`].
#[derive(Debug, Clone, PartialEq)]
pub struct CohortRun {
    pub records: Vec<MetricRecord>,
    pub warnings: Vec<String>,
}

/// Runs both passes over every manifest entry. Relative volume paths resolve
/// against `base_dir`.
pub fn run_cohort(
    manifest: &CohortManifest,
    base_dir: &Path,
    config: &SimulationConfig,
) -> Result<CohortRun> {
    config.validate()?;
    manifest.validate()?;
    let mut warnings = Vec::new();

    let label_map = config
        .labels
        .clone()
        .unwrap_or_else(|| manifest.metadata.label_map.clone());
    if config.labels.is_some() {
        let unknown: Vec<String> = label_map
            .iter()
            .filter(|(id, _)| !manifest.metadata.label_map.contains_key(id))
            .map(|(id, name)| format!("{id} ({name})"))
            .collect();
        if !unknown.is_empty() {
            let msg = format!(
                "labels not in the manifest label map, their records will be missing: {}",
                unknown.join(", ")
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let per_subject: Vec<Vec<MetricRecord>> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let structures: Vec<StructureSpec> = label_map
                    .iter()
                    .filter(|(id, _)| !entry.excluded_labels.contains(id))
                    .map(|(&label, name)| StructureSpec {
                        label,
                        name: name.clone(),
                    })
                    .collect();
                let wrap = |e: Error| Error::Subject {
                    subject: entry.subject_id.clone(),
                    source: Box::new(e),
                };
                let path = manifest.resolve_path(base_dir, entry);
                let volume = io::read_label_volume(&path).map_err(wrap)?;
                let records =
                    simulate_subject(&entry.subject_id, &entry.group, &volume, &structures, config)
                        .map_err(wrap)?;
                log::info!("simulated {}", entry.subject_id);
                Ok(records)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let records = finalize_records(per_subject.into_iter().flatten().collect(), config.reference_mode);
    Ok(CohortRun { records, warnings })
}
