//! Batch commands behind the `dscbias` binary.
//!
//! Every command takes plain paths (relative to the working directory) and
//! writes deterministic outputs: the same inputs, seed and config produce the
//! same bytes regardless of thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use dscbias_core::io::{self, TableFormat};
use dscbias_core::phantom::{self, PhantomSpec};
use dscbias_core::report;
use dscbias_core::{
    AnalysisOptions, Aggregation, BhFamily, CategoryThresholds, Error as CoreError, FractionSource,
    ReferenceMode, SimulationConfig, Spacing,
};

pub const METRICS_STEM: &str = "metrics";
pub const COMPARISONS_STEM: &str = "comparisons";
pub const RUN_METADATA: &str = "run_metadata.json";
pub const ANALYSIS_METADATA: &str = "analysis_metadata.json";

/// A problem with user-supplied configuration or specs (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn is_config_error(e: &CoreError) -> bool {
    match e {
        CoreError::Config(_)
        | CoreError::PhantomSpec(_)
        | CoreError::OrganOverlap { .. }
        | CoreError::OutOfBounds(_)
        | CoreError::InvalidMargin(_)
        | CoreError::InvalidSpacing(_)
        | CoreError::GroupCount(_) => true,
        CoreError::Subject { source, .. } => is_config_error(source),
        _ => false,
    }
}

/// 0 success, 1 runtime failure, 2 configuration or spec error.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            if is_config_error(e) {
                return 2;
            }
        }
    }
    1
}

fn default_spacing() -> f64 {
    1.0
}

fn default_margins() -> Vec<f64> {
    vec![1.0, 3.0]
}

fn default_thresholds() -> [f64; 2] {
    [100.0, 1000.0]
}

/// Everything that affects a run's tables, read from one TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default = "default_spacing")]
    pub target_spacing_mm: f64,
    #[serde(default = "default_margins")]
    pub margins_mm: Vec<f64>,
    #[serde(default)]
    pub reference_mode: ReferenceMode,
    #[serde(default)]
    pub fraction_source: FractionSource,
    /// `[a, b]`: differences are reported as a - b.
    #[serde(default)]
    pub group_order: Option<[String; 2]>,
    #[serde(default = "default_thresholds")]
    pub category_thresholds_cm3: [f64; 2],
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub bh_family: BhFamily,
    /// 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub format: TableFormat,
    /// Label id (as a string key) to structure name; defaults to the manifest's map.
    #[serde(default)]
    pub labels: Option<BTreeMap<String, String>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(format!("config: {e}")))?;
        cfg.thresholds()?;
        cfg.simulation()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn thresholds(&self) -> Result<CategoryThresholds> {
        let [lo, hi] = self.category_thresholds_cm3;
        Ok(CategoryThresholds::new(lo, hi)?)
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let labels = match &self.labels {
            None => None,
            Some(map) => {
                let mut out = BTreeMap::new();
                for (k, v) in map {
                    let id: u16 = k
                        .parse()
                        .map_err(|_| config_err(format!("label key '{k}' is not a label id")))?;
                    out.insert(id, v.clone());
                }
                Some(out)
            }
        };
        let cfg = SimulationConfig {
            target_spacing: Spacing::isotropic(self.target_spacing_mm)?,
            margins_mm: self.margins_mm.clone(),
            labels,
            reference_mode: self.reference_mode,
            fraction_source: self.fraction_source,
            threads: self.threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.out_dir.join(format!("{METRICS_STEM}.{}", self.format.extension()))
    }

    pub fn comparisons_path(&self) -> PathBuf {
        self.out_dir.join(format!("{COMPARISONS_STEM}.{}", self.format.extension()))
    }
}

fn write_json_doc<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn load_phantom_spec(path: &Path) -> Result<PhantomSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read spec {}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let spec: PhantomSpec = if is_toml {
        toml::from_str(&text).map_err(|e| config_err(format!("spec {}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| config_err(format!("spec {}: {e}", path.display())))?
    };
    Ok(spec)
}

/// Generates a phantom cohort and returns the manifest path.
pub fn cmd_phantom(
    spec: Option<&Path>,
    use_default: bool,
    seed: Option<u64>,
    out_dir: &Path,
    threads: usize,
) -> Result<PathBuf> {
    let mut spec = match (spec, use_default) {
        (Some(p), false) => load_phantom_spec(p)?,
        (None, true) => phantom::default_reference_spec(),
        _ => return Err(config_err("give exactly one of --spec or --default")),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    phantom::generate_cohort(&spec, out_dir, threads)?;
    Ok(out_dir.join("manifest.json"))
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    tool: String,
    manifest: &'a Path,
    target_spacing_mm: f64,
    margins_mm: &'a [f64],
    reference_mode: ReferenceMode,
    fraction_source: FractionSource,
    volume_note: &'static str,
    subjects: usize,
    records: usize,
    warnings: &'a [String],
}

/// Runs the simulation and writes the metrics table; returns its path.
pub fn cmd_simulate(config: &RunConfig) -> Result<PathBuf> {
    let sim = config.simulation()?;
    let manifest = io::read_manifest(&config.manifest)
        .with_context(|| format!("reading manifest {}", config.manifest.display()))?;
    let base = config.manifest.parent().unwrap_or(Path::new(""));
    let run = dscbias_core::run_cohort(&manifest, base, &sim)?;
    fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("creating {}", config.out_dir.display()))?;
    let path = config.metrics_path();
    io::write_metrics_table(&run.records, &path, config.format)?;
    let meta = RunMetadata {
        tool: format!("dscbias {}", env!("CARGO_PKG_VERSION")),
        manifest: &config.manifest,
        target_spacing_mm: config.target_spacing_mm,
        margins_mm: &config.margins_mm,
        reference_mode: config.reference_mode,
        fraction_source: config.fraction_source,
        volume_note: "volume_cm3 is measured after resampling to the target spacing",
        subjects: manifest.entries.len(),
        records: run.records.len(),
        warnings: &run.warnings,
    };
    write_json_doc(&config.out_dir.join(RUN_METADATA), &meta)?;
    Ok(path)
}

/// Group order for differences: config first, else the manifest's first-appearance order.
pub fn resolve_group_order(config: &RunConfig, swap: bool) -> Result<[String; 2]> {
    let [a, b] = match &config.group_order {
        Some(order) => order.clone(),
        None => {
            let manifest = io::read_manifest(&config.manifest)
                .with_context(|| format!("reading manifest {}", config.manifest.display()))?;
            let groups = manifest.groups();
            match <[String; 2]>::try_from(groups) {
                Ok(g) => g,
                Err(groups) => return Err(CoreError::GroupCount(groups).into()),
            }
        }
    };
    Ok(if swap { [b, a] } else { [a, b] })
}

#[derive(Serialize)]
struct AnalysisMetadata<'a> {
    tool: String,
    metrics: &'a Path,
    group_order: &'a [String; 2],
    category_thresholds_cm3: [f64; 2],
    aggregation: Aggregation,
    bh_family: BhFamily,
    category_membership: &'static str,
}

/// Compares the groups in a metrics table; returns the comparisons path.
pub fn cmd_analyze(config: &RunConfig, metrics: Option<&Path>, swap_groups: bool) -> Result<PathBuf> {
    let metrics_path = metrics.map(Path::to_path_buf).unwrap_or_else(|| config.metrics_path());
    let records = io::read_metrics_table(&metrics_path)
        .with_context(|| format!("reading metrics {}", metrics_path.display()))?;
    let order = resolve_group_order(config, swap_groups)?;
    let opts = AnalysisOptions {
        group_order: Some(order.clone()),
        thresholds: config.thresholds()?,
        aggregation: config.aggregation,
        bh_family: config.bh_family,
    };
    let comparisons = dscbias_core::analyze(&records, &opts)?;
    fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("creating {}", config.out_dir.display()))?;
    let path = config.comparisons_path();
    io::write_comparisons_table(&comparisons, &path, config.format)?;
    let meta = AnalysisMetadata {
        tool: format!("dscbias {}", env!("CARGO_PKG_VERSION")),
        metrics: &metrics_path,
        group_order: &order,
        category_thresholds_cm3: config.category_thresholds_cm3,
        aggregation: config.aggregation,
        bh_family: config.bh_family,
        category_membership: "cohort-wide mean structure volume",
    };
    write_json_doc(&config.out_dir.join(ANALYSIS_METADATA), &meta)?;
    Ok(path)
}

/// Renders a comparisons table as text.
pub fn cmd_report(comparisons: &Path, thresholds: CategoryThresholds) -> Result<String> {
    let rows = io::read_comparisons_table(comparisons)
        .with_context(|| format!("reading comparisons {}", comparisons.display()))?;
    Ok(report::render_report(&rows, thresholds))
}
