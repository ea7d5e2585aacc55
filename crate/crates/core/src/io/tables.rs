//! Metric and comparison tables as CSV or JSON.
//!
//! CSV numbers are written with 17 significant digits (`%.17g` style) so that
//! parsing them back reproduces the exact `f64`. Absent values are empty fields.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ConfusionCounts;
use crate::simulate::{Metric, MetricRecord, RecordFlags};
use crate::stats::{GroupComparison, ScopeKind};

pub const METRIC_COLUMNS: [&str; 17] = [
    "subject_id",
    "group",
    "structure",
    "margin_mm",
    "volume_cm3",
    "fraction_h",
    "tp_dil",
    "fp_dil",
    "tp_ero",
    "fn_ero",
    "dsc_dil",
    "dsc_ero",
    "dsc_avg",
    "ndsc_dil",
    "ndsc_ero",
    "ndsc_avg",
    "flags",
];

pub const COMPARISON_COLUMNS: [&str; 21] = [
    "scope_kind",
    "scope",
    "margin_mm",
    "metric",
    "group_a",
    "group_b",
    "n_a",
    "n_b",
    "mean_a",
    "mean_b",
    "mean_diff",
    "ci_low",
    "ci_high",
    "t_stat",
    "df_welch",
    "p_raw",
    "p_adjusted",
    "mean_volume_cm3",
    "pooled_mean",
    "pooled_sd",
    "zero_variance",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
}

impl TableFormat {
    /// `.json` selects JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => TableFormat::Json,
            _ => TableFormat::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::Config(format!("unknown table format '{other}'"))),
        }
    }
}

/// Formats like C's `%.17g`: shortest of fixed/exponent form, trailing zeros removed.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(format_g17).unwrap_or_default()
}

fn opt_count(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes records sorted by (structure, subject_id, margin).
pub fn write_metrics_table(records: &[MetricRecord], path: &Path, format: TableFormat) -> Result<()> {
    let mut sorted: Vec<&MetricRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (a.structure.as_str(), a.subject_id.as_str())
            .cmp(&(b.structure.as_str(), b.subject_id.as_str()))
            .then(a.margin_mm.total_cmp(&b.margin_mm))
    });
    if format == TableFormat::Json {
        return write_json(path, &sorted);
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(METRIC_COLUMNS).map_err(|e| csv_err(path, e))?;
    for r in sorted {
        let row = [
            r.subject_id.clone(),
            r.group.clone(),
            r.structure.clone(),
            format_g17(r.margin_mm),
            format_g17(r.volume_cm3),
            format_g17(r.fraction_h),
            opt_count(r.dil_counts.map(|c| c.tp)),
            opt_count(r.dil_counts.map(|c| c.fp)),
            opt_count(r.ero_counts.map(|c| c.tp)),
            opt_count(r.ero_counts.map(|c| c.fn_)),
            opt_num(r.dsc_dil),
            opt_num(r.dsc_ero),
            opt_num(r.dsc_avg),
            opt_num(r.ndsc_dil),
            opt_num(r.ndsc_ero),
            opt_num(r.ndsc_avg),
            r.flags.encode(),
        ];
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

struct Row<'a> {
    path: &'a Path,
    line: u64,
    rec: csv::StringRecord,
}

impl Row<'_> {
    fn field(&self, i: usize) -> &str {
        self.rec.get(i).unwrap_or("")
    }

    fn bad(&self, col: &str, v: &str) -> Error {
        Error::format(self.path, format!("line {}: bad {col} value '{v}'", self.line))
    }

    fn parse<T: FromStr>(&self, i: usize, col: &str) -> Result<T> {
        let v = self.field(i);
        v.parse().map_err(|_| self.bad(col, v))
    }

    fn opt<T: FromStr>(&self, i: usize, col: &str) -> Result<Option<T>> {
        if self.field(i).is_empty() {
            Ok(None)
        } else {
            self.parse(i, col).map(Some)
        }
    }
}

fn read_csv_rows<'a>(path: &'a Path, columns: &[&str]) -> Result<Vec<Row<'a>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().ne(columns.iter().copied()) {
        return Err(Error::format(path, "unexpected column header"));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        rows.push(Row { path, line: i as u64 + 2, rec });
    }
    Ok(rows)
}

pub fn read_metrics_table(path: &Path) -> Result<Vec<MetricRecord>> {
    if TableFormat::from_path(path) == TableFormat::Json {
        return read_json(path);
    }
    let mut out = Vec::new();
    for row in read_csv_rows(path, &METRIC_COLUMNS)? {
        let tp_dil: Option<u64> = row.opt(6, "tp_dil")?;
        let fp_dil: Option<u64> = row.opt(7, "fp_dil")?;
        let tp_ero: Option<u64> = row.opt(8, "tp_ero")?;
        let fn_ero: Option<u64> = row.opt(9, "fn_ero")?;
        let dil_counts = match (tp_dil, fp_dil) {
            (Some(tp), Some(fp)) => Some(ConfusionCounts { tp, fp, fn_: 0 }),
            (None, None) => None,
            _ => return Err(row.bad("tp_dil/fp_dil", "partial")),
        };
        let ero_counts = match (tp_ero, fn_ero) {
            (Some(tp), Some(fn_)) => Some(ConfusionCounts { tp, fp: 0, fn_ }),
            (None, None) => None,
            _ => return Err(row.bad("tp_ero/fn_ero", "partial")),
        };
        let flags = RecordFlags::decode(row.field(16)).map_err(|_| row.bad("flags", row.field(16)))?;
        out.push(MetricRecord {
            subject_id: row.field(0).to_string(),
            group: row.field(1).to_string(),
            structure: row.field(2).to_string(),
            margin_mm: row.parse(3, "margin_mm")?,
            volume_cm3: row.parse(4, "volume_cm3")?,
            fraction_h: row.parse(5, "fraction_h")?,
            dil_counts,
            ero_counts,
            dsc_dil: row.opt(10, "dsc_dil")?,
            dsc_ero: row.opt(11, "dsc_ero")?,
            dsc_avg: row.opt(12, "dsc_avg")?,
            ndsc_dil: row.opt(13, "ndsc_dil")?,
            ndsc_ero: row.opt(14, "ndsc_ero")?,
            ndsc_avg: row.opt(15, "ndsc_avg")?,
            flags,
        });
    }
    Ok(out)
}

/// Writes comparisons in the given order.
pub fn write_comparisons_table(
    comparisons: &[GroupComparison],
    path: &Path,
    format: TableFormat,
) -> Result<()> {
    if format == TableFormat::Json {
        return write_json(path, &comparisons);
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(COMPARISON_COLUMNS).map_err(|e| csv_err(path, e))?;
    for c in comparisons {
        let row = [
            c.scope_kind.as_str().to_string(),
            c.scope.clone(),
            format_g17(c.margin_mm),
            c.metric.as_str().to_string(),
            c.group_a.clone(),
            c.group_b.clone(),
            c.n_a.to_string(),
            c.n_b.to_string(),
            format_g17(c.mean_a),
            format_g17(c.mean_b),
            format_g17(c.mean_diff),
            format_g17(c.ci_low),
            format_g17(c.ci_high),
            format_g17(c.t_stat),
            format_g17(c.df_welch),
            format_g17(c.p_raw),
            format_g17(c.p_adjusted),
            format_g17(c.mean_volume_cm3),
            format_g17(c.pooled_mean),
            format_g17(c.pooled_sd),
            c.zero_variance.to_string(),
        ];
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_comparisons_table(path: &Path) -> Result<Vec<GroupComparison>> {
    if TableFormat::from_path(path) == TableFormat::Json {
        return read_json(path);
    }
    let mut out = Vec::new();
    for row in read_csv_rows(path, &COMPARISON_COLUMNS)? {
        let scope_kind: ScopeKind = row.parse(0, "scope_kind")?;
        let metric: Metric = row.parse(3, "metric")?;
        out.push(GroupComparison {
            scope_kind,
            scope: row.field(1).to_string(),
            margin_mm: row.parse(2, "margin_mm")?,
            metric,
            group_a: row.field(4).to_string(),
            group_b: row.field(5).to_string(),
            n_a: row.parse(6, "n_a")?,
            n_b: row.parse(7, "n_b")?,
            mean_a: row.parse(8, "mean_a")?,
            mean_b: row.parse(9, "mean_b")?,
            mean_diff: row.parse(10, "mean_diff")?,
            ci_low: row.parse(11, "ci_low")?,
            ci_high: row.parse(12, "ci_high")?,
            t_stat: row.parse(13, "t_stat")?,
            df_welch: row.parse(14, "df_welch")?,
            p_raw: row.parse(15, "p_raw")?,
            p_adjusted: row.parse(16, "p_adjusted")?,
            mean_volume_cm3: row.parse(17, "mean_volume_cm3")?,
            pooled_mean: row.parse(18, "pooled_mean")?,
            pooled_sd: row.parse(19, "pooled_sd")?,
            zero_variance: row.parse(20, "zero_variance")?,
        });
    }
    Ok(out)
}

/// Serde adapter writing non-finite floats as the strings `inf`, `-inf`, `nan`,
/// which plain JSON numbers cannot hold.
pub(crate) mod lenient_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::format_g17(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => s.parse().map_err(|_| de::Error::custom(format!("bad float '{s}'"))),
        }
    }
}
