//! Rendering of experiment results: machine CSV, human-readable tables,
//! and a dependency-free SVG plot of the balancing decay curves.
//!
//! The CSV schema is fixed — header `level,max_rounds,avg_rounds,
//! max_avg_load,avg_hops`, integer level and round columns, and two-decimal
//! fixed formatting for the real-valued columns — so identical runs produce
//! byte-identical files and downstream diffs stay meaningful.

use std::fmt::Write as _;

use crate::all_to_all::AtaStats;
use crate::metrics::LevelMetrics;

/// Fixed CSV header for per-level experiment results.
pub const CSV_HEADER: &str = "level,max_rounds,avg_rounds,max_avg_load,avg_hops";

/// Machine-readable CSV, one row per level.
pub fn write_csv(metrics: &[LevelMetrics]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for m in metrics {
        writeln!(
            out,
            "{},{},{:.2},{:.2},{:.2}",
            m.level, m.max_rounds, m.avg_rounds, m.max_avg_load, m.avg_hops
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Human-readable fixed-width table with the same columns as the CSV.
pub fn render_table(metrics: &[LevelMetrics]) -> String {
    let mut out = String::from("lvl | max rds | avg rds | max avg load | avg hops\n");
    out.push_str("----+---------+---------+--------------+---------\n");
    for m in metrics {
        writeln!(
            out,
            "{:>3} | {:>7} | {:>7.2} | {:>12.2} | {:>8.2}",
            m.level, m.max_rounds, m.avg_rounds, m.max_avg_load, m.avg_hops
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Human-readable summary of an all-to-all counting run.
pub fn render_ata_table(stats: &AtaStats) -> String {
    let mut out = String::new();
    writeln!(out, "nodes            : {}", stats.n).unwrap();
    writeln!(out, "deliveries       : {}", stats.deliveries).unwrap();
    writeln!(out, "total traversals : {}", stats.total_traversals).unwrap();
    writeln!(out, "avg hops         : {:.2}", stats.avg_hops).unwrap();
    writeln!(out, "max depth        : {}", stats.max_depth).unwrap();
    writeln!(out, "max propagation  : {:.4}", stats.max_propagation).unwrap();
    out.push_str("tier | traversals | share  | per-link load\n");
    out.push_str("-----+------------+--------+--------------\n");
    for (i, &tr) in stats.per_level_traversals.iter().enumerate() {
        writeln!(
            out,
            "{:>4} | {:>10} | {:>5.1}% | {:>13.2}",
            i + 1,
            tr,
            stats.per_level_share[i] * 100.0,
            stats.per_link_load[i]
        )
        .unwrap();
    }
    out
}

/// SVG plot of remaining-messages-per-phase decay curves, one polyline per
/// sampled clique instance, on a log10(1+y) vertical scale. Pure string
/// assembly: no graphics dependencies, byte-deterministic output.
pub fn render_decay_svg(series: &[Vec<u64>]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const ML: f64 = 56.0; // left margin (y labels)
    const MB: f64 = 40.0; // bottom margin (x labels)
    const MT: f64 = 16.0;
    const MR: f64 = 16.0;

    let phases = series.iter().map(Vec::len).max().unwrap_or(0);
    let peak = series
        .iter()
        .flat_map(|s| s.iter().copied())
        .max()
        .unwrap_or(0);
    let y_top = ((peak + 1) as f64).log10().max(1.0);
    let x_span = (phases.max(2) - 1) as f64;
    let px = |phase: usize| ML + (W - ML - MR) * phase as f64 / x_span;
    let py = |v: u64| {
        let frac = ((v + 1) as f64).log10() / y_top;
        H - MB - (H - MB - MT) * frac
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // Axes.
    out.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    out.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR
    ));
    // Y ticks at powers of ten.
    let mut decade = 1u64;
    loop {
        let y = py(decade - 1); // decade-1 so that 10^0 sits at value 0.
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{ML}\" y2=\"{y:.1}\" stroke=\"black\"/>\n",
            ML - 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{decade}</text>\n",
            ML - 8.0,
            y + 4.0
        ));
        if decade > peak {
            break;
        }
        decade *= 10;
    }
    // X ticks per phase.
    for phase in 0..phases.max(2) {
        let x = px(phase);
        out.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{0}\" x2=\"{x:.1}\" y2=\"{1}\" stroke=\"black\"/>\n",
            H - MB,
            H - MB + 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{phase}</text>\n",
            H - MB + 18.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">balancing phase</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 6.0
    ));
    out.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0})\">\
         remaining messages</text>\n",
        MT + (H - MB - MT) / 2.0
    ));
    // One decay curve per sampled instance.
    for s in series {
        if s.is_empty() {
            continue;
        }
        let mut points = String::new();
        for (phase, &v) in s.iter().enumerate() {
            let _ = write!(points, "{:.1},{:.1} ", px(phase), py(v));
        }
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"steelblue\" stroke-opacity=\"0.35\" \
             points=\"{}\"/>\n",
            points.trim_end()
        ));
    }
    out.push_str("</svg>\n");
    out
}
