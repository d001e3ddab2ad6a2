//! Plain-text tables for terminal output: assignment performance per
//! approach and the best-approach distribution, percentages to one decimal.

use crate::evalkit::{BestDistribution, Metrics};

/// `Approach | MRR MAP H@1..H@5` rows, every metric as a percentage.
pub fn metrics_table(title: &str, rows: &[(String, Metrics)]) -> String {
    let headers = ["MRR", "MAP", "H@1", "H@2", "H@3", "H@4", "H@5"];
    let name_width = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(["Approach".len()])
        .max()
        .unwrap();
    let mut out = String::new();
    out.push_str(title);
    out.push('\n');
    out.push_str(&format!("{:<name_width$}", "Approach"));
    for h in headers {
        out.push_str(&format!("  {h:>6}"));
    }
    out.push('\n');
    out.push_str(&"-".repeat(name_width + headers.len() * 8));
    out.push('\n');
    for (name, metrics) in rows {
        out.push_str(&format!("{name:<name_width$}"));
        let values = [
            metrics.mrr,
            metrics.map,
            metrics.hit_at(1),
            metrics.hit_at(2),
            metrics.hit_at(3),
            metrics.hit_at(4),
            metrics.hit_at(5),
        ];
        for v in values {
            out.push_str(&format!("  {:>6}", percent(v)));
        }
        out.push('\n');
    }
    out
}

/// Counts (and shares) of queries per best-approach category, with a total
/// row; all-miss queries are reported below the table when present.
pub fn distribution_table(distribution: &BestDistribution, all_miss: usize) -> String {
    let rows: [(&str, usize); 7] = [
        ("FREQ", distribution.freq_only),
        ("TEXTSIM", distribution.textsim_only),
        ("L2R", distribution.l2r_only),
        ("FREQ and TEXTSIM", distribution.freq_textsim_tie),
        ("FREQ and L2R", distribution.freq_l2r_tie),
        ("TEXTSIM and L2R", distribution.textsim_l2r_tie),
        ("FREQ, TEXTSIM, and L2R", distribution.three_way_tie),
    ];
    let name_width = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(["Best approach".len()])
        .max()
        .unwrap();
    let mut out = String::new();
    out.push_str(&format!("{:<name_width$}  {:>15}\n", "Best approach", "Reports"));
    out.push_str(&"-".repeat(name_width + 17));
    out.push('\n');
    for (name, count) in rows {
        out.push_str(&format!(
            "{name:<name_width$}  {:>15}\n",
            count_with_share(count, distribution.total)
        ));
    }
    out.push_str(&format!(
        "{:<name_width$}  {:>15}\n",
        "Total",
        distribution.total
    ));
    if all_miss > 0 {
        let noun = if all_miss == 1 { "query" } else { "queries" };
        out.push_str(&format!("(all approaches missed {all_miss} {noun})\n"));
    }
    out
}

fn percent(v: f64) -> String {
    format!("{:.1}%", v * 100.0)
}

fn count_with_share(count: usize, total: usize) -> String {
    if total == 0 {
        return count.to_string();
    }
    format!("{count} ({:.1}%)", count as f64 / total as f64 * 100.0)
}
