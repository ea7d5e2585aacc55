//! Plain-text rendering of comparison tables with two decimals.

use std::collections::BTreeSet;

use crate::simulate::Metric;
use crate::stats::{CategoryThresholds, GroupComparison, ScopeKind, SizeCategory};
use crate::volume::VolumeCm3;

pub const EMPTY_MESSAGE: &str = "No comparisons to report.\n";

/// Two decimals; values that round to zero never carry a minus sign.
pub fn fmt2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// `diff (low, high)`.
pub fn fmt_ci_paren(c: &GroupComparison) -> String {
    format!("{} ({}, {})", fmt2(c.mean_diff), fmt2(c.ci_low), fmt2(c.ci_high))
}

/// `diff [low, high]`.
pub fn fmt_ci_bracket(c: &GroupComparison) -> String {
    format!("{} [{}, {}]", fmt2(c.mean_diff), fmt2(c.ci_low), fmt2(c.ci_high))
}

fn fmt_margin(m: f64) -> String {
    format!("{m} mm")
}

enum Line {
    Cells(Vec<String>),
    Rule,
}

fn layout(header: Vec<String>, lines: Vec<Line>) -> String {
    let ncol = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for l in &lines {
        if let Line::Cells(cells) = l {
            for (w, c) in widths.iter_mut().zip(cells) {
                *w = (*w).max(c.chars().count());
            }
        }
    }
    let total = widths.iter().sum::<usize>() + 2 * (ncol - 1);
    let row = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            s.extend(std::iter::repeat_n(' ', w - c.chars().count()));
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = row(&header);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for l in lines {
        match l {
            Line::Cells(cells) => out.push_str(&row(&cells)),
            Line::Rule => {
                out.push_str("- ".repeat(total.div_ceil(2)).trim_end());
                out.push('\n');
            }
        }
    }
    out
}

fn margins(rows: &[&GroupComparison]) -> Vec<f64> {
    let mut m: Vec<f64> = rows.iter().map(|c| c.margin_mm).collect();
    m.sort_by(f64::total_cmp);
    m.dedup();
    m
}

fn structure_blocks(rows: &[&GroupComparison], thresholds: CategoryThresholds) -> String {
    let mut out = String::new();
    let mut metrics: Vec<Metric> = rows.iter().map(|c| c.metric).collect::<BTreeSet<_>>().into_iter().collect();
    metrics.sort();
    for metric in metrics {
        for margin in margins(rows) {
            let mut block: Vec<&GroupComparison> = rows
                .iter()
                .copied()
                .filter(|c| c.metric == metric && c.margin_mm == margin)
                .collect();
            if block.is_empty() {
                continue;
            }
            block.sort_by(|a, b| {
                b.mean_volume_cm3
                    .total_cmp(&a.mean_volume_cm3)
                    .then_with(|| a.scope.cmp(&b.scope))
            });
            let m = fmt_margin(margin);
            let header = vec![
                "Structure".to_string(),
                "Avg. Volume".to_string(),
                format!("{metric} ({m})"),
                format!("\u{394}{metric} ({m})"),
            ];
            let mut lines = Vec::new();
            let mut prev: Option<SizeCategory> = None;
            for c in block {
                let cat = thresholds.categorize(VolumeCm3(c.mean_volume_cm3));
                if prev.is_some_and(|p| p != cat) {
                    lines.push(Line::Rule);
                }
                prev = Some(cat);
                lines.push(Line::Cells(vec![
                    c.scope.clone(),
                    format!("{:.0} cm3", c.mean_volume_cm3),
                    format!("{} \u{b1} {}", fmt2(c.pooled_mean), fmt2(c.pooled_sd)),
                    fmt_ci_bracket(c),
                ]));
            }
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&layout(header, lines));
        }
    }
    out
}

fn category_block(rows: &[&GroupComparison]) -> String {
    let mut metrics: Vec<Metric> = rows.iter().map(|c| c.metric).collect::<BTreeSet<_>>().into_iter().collect();
    metrics.sort();
    let mut header = vec!["Category".to_string(), "Error Margin".to_string()];
    header.extend(metrics.iter().map(|m| m.to_string()));
    let mut lines = Vec::new();
    for cat in SizeCategory::ALL {
        let in_cat: Vec<&GroupComparison> =
            rows.iter().copied().filter(|c| c.scope == cat.as_str()).collect();
        for (i, margin) in margins(&in_cat).into_iter().enumerate() {
            let mut cells = vec![
                if i == 0 { capitalize(cat.as_str()) } else { String::new() },
                fmt_margin(margin),
            ];
            for &metric in &metrics {
                let cell = in_cat
                    .iter()
                    .find(|c| c.metric == metric && c.margin_mm == margin)
                    .map(|c| fmt_ci_paren(c))
                    .unwrap_or_default();
                cells.push(cell);
            }
            lines.push(Line::Cells(cells));
        }
    }
    layout(header, lines)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Renders structure tables (largest volume first, category boundaries dashed)
/// and the category table (large, medium, small).
pub fn render_report(comparisons: &[GroupComparison], thresholds: CategoryThresholds) -> String {
    if comparisons.is_empty() {
        return EMPTY_MESSAGE.to_string();
    }
    let first = &comparisons[0];
    let mut out = format!("Differences: {} - {}\n", first.group_a, first.group_b);
    let structures: Vec<&GroupComparison> =
        comparisons.iter().filter(|c| c.scope_kind == ScopeKind::Structure).collect();
    let categories: Vec<&GroupComparison> =
        comparisons.iter().filter(|c| c.scope_kind == ScopeKind::Category).collect();
    if !structures.is_empty() {
        out.push_str("\nStructures\n\n");
        out.push_str(&structure_blocks(&structures, thresholds));
    }
    if !categories.is_empty() {
        out.push_str("\nVolume categories\n\n");
        out.push_str(&category_block(&categories));
    }
    out
}
