//! Two-group comparison statistics: Welch's t-test, mean-difference confidence
//! intervals, Benjamini–Hochberg adjustment and volume-category aggregation.

pub mod special;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{Metric, MetricRecord};
use crate::volume::VolumeCm3;

pub use special::{t_cdf, t_quantile};

/// Volume category of a structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeCategory {
    Large,
    Medium,
    Small,
}

impl SizeCategory {
    pub const ALL: [SizeCategory; 3] = [SizeCategory::Large, SizeCategory::Medium, SizeCategory::Small];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeCategory::Large => "large",
            SizeCategory::Medium => "medium",
            SizeCategory::Small => "small",
        }
    }
}

impl fmt::Display for SizeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SizeCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "large" => Ok(SizeCategory::Large),
            "medium" => Ok(SizeCategory::Medium),
            "small" => Ok(SizeCategory::Small),
            other => Err(Error::Config(format!("unknown size category '{other}'"))),
        }
    }
}

/// Category boundaries in cm³: small below `small_below`, large above `large_above`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryThresholds {
    pub small_below: f64,
    pub large_above: f64,
}

impl Default for CategoryThresholds {
    fn default() -> Self {
        CategoryThresholds {
            small_below: 100.0,
            large_above: 1000.0,
        }
    }
}

impl CategoryThresholds {
    pub fn new(small_below: f64, large_above: f64) -> Result<Self> {
        if small_below > 0.0 && large_above > small_below && large_above.is_finite() {
            Ok(CategoryThresholds {
                small_below,
                large_above,
            })
        } else {
            Err(Error::Config(format!(
                "category thresholds must be positive and strictly increasing, got [{small_below}, {large_above}]"
            )))
        }
    }

    /// The middle interval is closed: both boundaries count as medium.
    pub fn categorize(&self, volume: VolumeCm3) -> SizeCategory {
        if volume.0 < self.small_below {
            SizeCategory::Small
        } else if volume.0 > self.large_above {
            SizeCategory::Large
        } else {
            SizeCategory::Medium
        }
    }
}

/// Categorizes with the default 100 / 1000 cm³ boundaries.
pub fn categorize(volume: VolumeCm3) -> SizeCategory {
    CategoryThresholds::default().categorize(volume)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t_stat: f64,
    pub df: f64,
    pub p_value: f64,
    /// Both samples have zero variance.
    pub zero_variance: bool,
}

struct Moments {
    n: f64,
    mean: f64,
    var: f64,
}

fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    // sum / n is not exact for a constant sample; keep its variance at zero
    if x.iter().all(|&v| v == x[0]) {
        return Moments { n, mean: x[0], var: 0.0 };
    }
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Moments { n, mean, var }
}

fn check_sizes(a: &[f64], b: &[f64]) -> Result<()> {
    for (name, s) in [("sample a", a), ("sample b", b)] {
        if s.len() < 2 {
            return Err(Error::SampleTooSmall {
                context: name.to_string(),
                n: s.len(),
            });
        }
    }
    Ok(())
}

struct WelchParts {
    diff: f64,
    se: f64,
    df: f64,
}

fn welch_parts(a: &[f64], b: &[f64]) -> WelchParts {
    let ma = moments(a);
    let mb = moments(b);
    let va = ma.var / ma.n;
    let vb = mb.var / mb.n;
    let se2 = va + vb;
    let df = if se2 > 0.0 {
        se2 * se2 / (va * va / (ma.n - 1.0) + vb * vb / (mb.n - 1.0))
    } else {
        ma.n + mb.n - 2.0
    };
    WelchParts {
        diff: ma.mean - mb.mean,
        se: se2.sqrt(),
        df,
    }
}

/// Welch's unequal-variance t-test, two-sided.
///
/// Two zero-variance samples give `t = 0, p = 1` when their means agree and
/// `t = ±inf, p = 0` otherwise.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    check_sizes(a, b)?;
    let w = welch_parts(a, b);
    if w.se == 0.0 {
        let t_stat = if w.diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(w.diff)
        };
        return Ok(WelchTest {
            t_stat,
            df: w.df,
            p_value: if w.diff == 0.0 { 1.0 } else { 0.0 },
            zero_variance: true,
        });
    }
    let t_stat = w.diff / w.se;
    Ok(WelchTest {
        t_stat,
        df: w.df,
        p_value: special::t_two_sided_p(t_stat, w.df),
        zero_variance: false,
    })
}

/// Mean difference `mean(a) - mean(b)` with its 95% Welch confidence interval.
pub fn mean_difference_ci(a: &[f64], b: &[f64]) -> Result<(f64, f64, f64)> {
    check_sizes(a, b)?;
    let w = welch_parts(a, b);
    if w.se == 0.0 {
        return Ok((w.diff, w.diff, w.diff));
    }
    let half = t_quantile(0.975, w.df)? * w.se;
    Ok((w.diff, w.diff - half, w.diff + half))
}

/// Benjamini–Hochberg adjusted p-values, returned in input order.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p[i].total_cmp(&p[j]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (1..=m).rev() {
        let idx = order[rank - 1];
        let q = if rank == m {
            p[idx]
        } else {
            p[idx] * m as f64 / rank as f64
        };
        running = running.min(q);
        adjusted[idx] = running.min(1.0);
    }
    adjusted
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeKind {
    Structure,
    Category,
}

impl ScopeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScopeKind::Structure => "structure",
            ScopeKind::Category => "category",
        }
    }
}

impl FromStr for ScopeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structure" => Ok(ScopeKind::Structure),
            "category" => Ok(ScopeKind::Category),
            other => Err(Error::Config(format!("unknown scope kind '{other}'"))),
        }
    }
}

/// How per-category samples are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// One value per subject: the mean over the category's structures.
    #[default]
    SubjectMean,
    /// Every (subject, structure) score is its own observation.
    Flat,
}

/// Which comparisons share one Benjamini–Hochberg family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BhFamily {
    /// One family per (scope kind, metric, margin).
    #[default]
    PerMetricMargin,
    /// One family per scope kind, spanning all metrics and margins.
    PerScopeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct AnalysisOptions {
    /// `[a, b]`; differences are `a - b`. `None` orders the two groups lexicographically.
    pub group_order: Option<[String; 2]>,
    pub thresholds: CategoryThresholds,
    pub aggregation: Aggregation,
    pub bh_family: BhFamily,
}


/// One two-group comparison of a metric within a scope at one margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub scope_kind: ScopeKind,
    pub scope: String,
    pub margin_mm: f64,
    pub metric: Metric,
    pub group_a: String,
    pub group_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(with = "crate::io::lenient_f64")]
    pub t_stat: f64,
    pub df_welch: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    /// Cohort-wide mean structure volume of the scope.
    pub mean_volume_cm3: f64,
    /// Mean and sample standard deviation of all observations, both groups pooled.
    pub pooled_mean: f64,
    pub pooled_sd: f64,
    pub zero_variance: bool,
}

fn resolve_groups(records: &[MetricRecord], order: &Option<[String; 2]>) -> Result<[String; 2]> {
    let present: BTreeSet<&str> = records.iter().map(|r| r.group.as_str()).collect();
    if present.len() != 2 {
        return Err(Error::GroupCount(present.into_iter().map(String::from).collect()));
    }
    match order {
        Some([a, b]) => {
            if a != b && present.contains(a.as_str()) && present.contains(b.as_str()) {
                Ok([a.clone(), b.clone()])
            } else {
                Err(Error::Config(format!(
                    "group order [{a}, {b}] does not match groups {present:?}"
                )))
            }
        }
        None => {
            let mut it = present.into_iter();
            let a = it.next().unwrap().to_string();
            let b = it.next().unwrap().to_string();
            Ok([a, b])
        }
    }
}

/// Cohort-wide mean volume per structure over non-missing records.
fn structure_volumes<'a>(records: &[&'a MetricRecord]) -> BTreeMap<&'a str, f64> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.flags.missing) {
        let e = acc.entry(r.structure.as_str()).or_default();
        e.0 += r.volume_cm3;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn pooled_stats(a: &[f64], b: &[f64]) -> (f64, f64) {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let m = moments(&all);
    (m.mean, m.var.sqrt())
}

#[allow(clippy::too_many_arguments)]
fn compare(
    scope_kind: ScopeKind,
    scope: String,
    margin_mm: f64,
    metric: Metric,
    groups: &[String; 2],
    a: &[f64],
    b: &[f64],
    mean_volume_cm3: f64,
) -> Result<GroupComparison> {
    let context = format!("{} '{scope}' ({metric}, {margin_mm} mm)", scope_kind.as_str());
    for (g, s) in groups.iter().zip([a, b]) {
        if s.len() < 2 {
            return Err(Error::SampleTooSmall {
                context: format!("group '{g}' in {context}"),
                n: s.len(),
            });
        }
    }
    let welch = welch_t_test(a, b)?;
    let (mean_diff, ci_low, ci_high) = mean_difference_ci(a, b)?;
    let (pooled_mean, pooled_sd) = pooled_stats(a, b);
    if welch.zero_variance && mean_diff != 0.0 {
        log::warn!("{context}: zero variance in both groups with unequal means");
    }
    Ok(GroupComparison {
        scope_kind,
        scope,
        margin_mm,
        metric,
        group_a: groups[0].clone(),
        group_b: groups[1].clone(),
        n_a: a.len(),
        n_b: b.len(),
        mean_a: moments(a).mean,
        mean_b: moments(b).mean,
        mean_diff,
        ci_low,
        ci_high,
        t_stat: welch.t_stat,
        df_welch: welch.df,
        p_raw: welch.p_value,
        p_adjusted: welch.p_value,
        mean_volume_cm3,
        pooled_mean,
        pooled_sd,
        zero_variance: welch.zero_variance,
    })
}

fn compare_all(
    records: &[MetricRecord],
    scope_kind: ScopeKind,
    metric: Metric,
    margin_mm: f64,
    opts: &AnalysisOptions,
) -> Result<Vec<GroupComparison>> {
    let groups = resolve_groups(records, &opts.group_order)?;
    let cell: Vec<&MetricRecord> = records
        .iter()
        .filter(|r| r.margin_mm == margin_mm)
        .collect();
    let volumes = structure_volumes(&cell);
    let group_index = |g: &str| groups.iter().position(|x| x == g);

    let mut out = Vec::new();
    match scope_kind {
        ScopeKind::Structure => {
            let mut samples: BTreeMap<&str, [Vec<f64>; 2]> = BTreeMap::new();
            for r in &cell {
                let entry = samples.entry(r.structure.as_str()).or_default();
                if let (Some(gi), Some(v)) = (group_index(&r.group), r.score(metric)) {
                    entry[gi].push(v);
                }
            }
            for (structure, [a, b]) in samples {
                let vol = volumes.get(structure).copied().unwrap_or(0.0);
                out.push(compare(
                    scope_kind,
                    structure.to_string(),
                    margin_mm,
                    metric,
                    &groups,
                    &a,
                    &b,
                    vol,
                )?);
            }
        }
        ScopeKind::Category => {
            let category_of: BTreeMap<&str, SizeCategory> = volumes
                .iter()
                .map(|(&s, &v)| (s, opts.thresholds.categorize(VolumeCm3(v))))
                .collect();
            for cat in SizeCategory::ALL {
                let members: Vec<&str> = category_of
                    .iter()
                    .filter(|(_, &c)| c == cat)
                    .map(|(&s, _)| s)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let mean_volume = members.iter().map(|s| volumes[s]).sum::<f64>() / members.len() as f64;
                let mut samples: [Vec<f64>; 2] = Default::default();
                match opts.aggregation {
                    Aggregation::SubjectMean => {
                        // subject id -> (group index, sum, count); BTreeMap keeps the order stable.
                        let mut per_subject: BTreeMap<&str, (usize, f64, usize)> = BTreeMap::new();
                        for r in cell.iter().filter(|r| members.contains(&r.structure.as_str())) {
                            if let (Some(gi), Some(v)) = (group_index(&r.group), r.score(metric)) {
                                let e = per_subject.entry(r.subject_id.as_str()).or_insert((gi, 0.0, 0));
                                e.1 += v;
                                e.2 += 1;
                            }
                        }
                        for (gi, sum, n) in per_subject.into_values() {
                            samples[gi].push(sum / n as f64);
                        }
                    }
                    Aggregation::Flat => {
                        for r in cell.iter().filter(|r| members.contains(&r.structure.as_str())) {
                            if let (Some(gi), Some(v)) = (group_index(&r.group), r.score(metric)) {
                                samples[gi].push(v);
                            }
                        }
                    }
                }
                let [a, b] = samples;
                out.push(compare(
                    scope_kind,
                    cat.to_string(),
                    margin_mm,
                    metric,
                    &groups,
                    &a,
                    &b,
                    mean_volume,
                )?);
            }
        }
    }
    Ok(out)
}

fn apply_bh(comparisons: &mut [GroupComparison]) {
    let p: Vec<f64> = comparisons.iter().map(|c| c.p_raw).collect();
    for (c, q) in comparisons.iter_mut().zip(benjamini_hochberg(&p)) {
        c.p_adjusted = q;
    }
}

/// Compares the two groups for every scope of `scope_kind` at one margin and
/// metric; Benjamini–Hochberg runs over the returned family.
pub fn aggregate(
    records: &[MetricRecord],
    scope_kind: ScopeKind,
    metric: Metric,
    margin_mm: f64,
    opts: &AnalysisOptions,
) -> Result<Vec<GroupComparison>> {
    let mut out = compare_all(records, scope_kind, metric, margin_mm, opts)?;
    apply_bh(&mut out);
    Ok(out)
}

/// Full analysis: both scope kinds, both metrics and every margin present.
///
/// Output order: structures before categories, then margin, then metric.
pub fn analyze(records: &[MetricRecord], opts: &AnalysisOptions) -> Result<Vec<GroupComparison>> {
    let mut margins: Vec<f64> = records.iter().map(|r| r.margin_mm).collect();
    margins.sort_by(f64::total_cmp);
    margins.dedup();
    let mut out = Vec::new();
    for scope_kind in [ScopeKind::Structure, ScopeKind::Category] {
        let mut family_start = out.len();
        for &margin in &margins {
            for metric in [Metric::Dsc, Metric::Ndsc] {
                let block = compare_all(records, scope_kind, metric, margin, opts)?;
                out.extend(block);
                if opts.bh_family == BhFamily::PerMetricMargin {
                    apply_bh(&mut out[family_start..]);
                    family_start = out.len();
                }
            }
        }
        apply_bh(&mut out[family_start..]);
    }
    Ok(out)
}
