//! Small helpers for the human-readable report tables.

use std::collections::BTreeMap;

use crate::filter::ThroughputReport;

/// Ratio rendered as a one-decimal percentage, e.g. `0.82` → `82.0%`.
pub fn format_percent(ratio: f64) -> String {
    format!("{:.1}%", ratio * 100.0)
}

/// Two-column table with a left-aligned label column.
pub fn render_kv_table(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (key, value) in rows {
        out.push_str(&format!("{key:<width$}  {value}\n"));
    }
    out
}

/// Human-readable throughput table with per-rule rejection counts.
pub fn render_throughput(report: &ThroughputReport) -> String {
    let mut rows = vec![
        ("total".to_string(), report.total.to_string()),
        ("accepted".to_string(), report.accepted.to_string()),
        ("rejected".to_string(), report.rejected_total().to_string()),
        ("throughput".to_string(), format_percent(report.throughput)),
    ];
    for (rule, count) in &report.rejected_by_rule {
        rows.push((format!("rejected: {rule}"), count.to_string()));
    }
    render_kv_table(&rows)
}

/// Per-domain ratio table used by the evaluation report.
pub fn render_domain_ratios(
    overall: f64,
    per_domain: &BTreeMap<String, f64>,
    counts: &BTreeMap<String, (usize, usize)>,
) -> String {
    let mut rows = vec![("overall".to_string(), format_percent(overall))];
    for (domain, ratio) in per_domain {
        let (matched, total) = counts.get(domain).copied().unwrap_or((0, 0));
        rows.push((
            domain.clone(),
            format!("{} ({matched}/{total})", format_percent(*ratio)),
        ));
    }
    render_kv_table(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_formatting_matches_report_style() {
        assert_eq!(format_percent(0.82), "82.0%");
        assert_eq!(format_percent(0.473), "47.3%");
        assert_eq!(format_percent(1.0), "100.0%");
        assert_eq!(format_percent(0.0), "0.0%");
    }

    #[test]
    fn kv_table_aligns_columns() {
        let table = render_kv_table(&[
            ("short".to_string(), "1".to_string()),
            ("a longer label".to_string(), "2".to_string()),
        ]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "short           1");
        assert_eq!(lines[1], "a longer label  2");
    }
}
