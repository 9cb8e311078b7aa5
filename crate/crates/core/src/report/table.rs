//! Fixed-width text rendering of an analysis report.
//!
//! Pressures print with two decimals, path latencies with one; zero and
//! absent cells stay blank. The layout is deterministic, so golden tests
//! can compare bytes.

use super::AnalysisReport;
use crate::cycles::Cy;

fn cell(value: Cy, width: usize, decimals: u32) -> String {
    if value.is_zero() {
        " ".repeat(width)
    } else {
        format!("{:>width$}", value.render(decimals))
    }
}

fn opt_cell(value: Option<Cy>, width: usize, decimals: u32) -> String {
    match value {
        Some(v) => format!("{:>width$}", v.render(decimals)),
        None => " ".repeat(width),
    }
}

/// Render the per-line table, footer sums, summary bracket, and warnings.
pub fn render_table(report: &AnalysisReport) -> String {
    let nports = report.ports.len();

    // Column widths: wide enough for the header and every rendered value.
    let mut pw = vec![0usize; nports];
    for (i, name) in report.ports.iter().enumerate() {
        pw[i] = name.len().max(5);
        pw[i] = pw[i].max(report.port_sums[i].render(2).len());
    }
    for line in &report.lines {
        for (i, v) in line.pressure.iter().enumerate() {
            if !v.is_zero() {
                pw[i] = pw[i].max(v.render(2).len());
            }
        }
    }
    let lcd_w = 5usize.max(report.lcd_total.render(1).len());
    let cp_w = 5usize.max(report.cp_total.render(1).len());
    let ln_w = report
        .lines
        .iter()
        .map(|l| l.line_number.to_string().len())
        .max()
        .unwrap_or(2)
        .max(2);

    let mut out = String::new();

    // Header
    let mut head = String::new();
    for (i, name) in report.ports.iter().enumerate() {
        if i > 0 {
            head.push(' ');
        }
        head.push_str(&format!("{:>width$}", name, width = pw[i]));
    }
    head.push_str(&format!(
        " | {:>lw$} | {:>cw$} | {:>nw$} | Assembly Instructions",
        "LCD",
        "CP",
        "LN",
        lw = lcd_w,
        cw = cp_w,
        nw = ln_w
    ));
    out.push_str(&head);
    out.push('\n');

    let ports_width = pw.iter().sum::<usize>() + nports.saturating_sub(1);
    let rule = format!(
        "{}-+-{}-+-{}-+-{}-+-{}",
        "-".repeat(ports_width),
        "-".repeat(lcd_w),
        "-".repeat(cp_w),
        "-".repeat(ln_w),
        "-".repeat(22)
    );
    out.push_str(&rule);
    out.push('\n');

    // Body
    for line in &report.lines {
        let mut row = String::new();
        for (i, v) in line.pressure.iter().enumerate() {
            if i > 0 {
                row.push(' ');
            }
            row.push_str(&cell(*v, pw[i], 2));
        }
        row.push_str(&format!(
            " | {} | {} | {:>nw$} | {}",
            opt_cell(line.lcd, lcd_w, 1),
            opt_cell(line.cp, cp_w, 1),
            line.line_number,
            line.source.trim(),
            nw = ln_w
        ));
        out.push_str(row.trim_end());
        out.push('\n');
    }

    out.push_str(&rule);
    out.push('\n');

    // Footer: totals and the per-iteration row.
    let unroll_label = if report.unroll == 1 {
        "sum".to_string()
    } else {
        format!("sum ({}x unrolled)", report.unroll)
    };
    let mut totals = String::new();
    for (i, v) in report.port_sums.iter().enumerate() {
        if i > 0 {
            totals.push(' ');
        }
        totals.push_str(&cell(*v, pw[i], 2));
    }
    totals.push_str(&format!(
        " | {} | {} | {}",
        cell(report.lcd_total, lcd_w, 1),
        cell(report.cp_total, cp_w, 1),
        unroll_label
    ));
    out.push_str(totals.trim_end());
    out.push('\n');

    let unroll = Cy::int(report.unroll as i64);
    let mut per_iter = String::new();
    for (i, v) in report.port_sums.iter().enumerate() {
        if i > 0 {
            per_iter.push(' ');
        }
        per_iter.push_str(&cell(*v / unroll, pw[i], 2));
    }
    per_iter.push_str(&format!(
        " | {} | {} | per high-level iteration",
        cell(report.lcd_per_src_iter, lcd_w, 1),
        cell(report.cp_per_src_iter, cp_w, 1)
    ));
    out.push_str(per_iter.trim_end());
    out.push('\n');

    // Summary bracket and any ordering notes.
    out.push('\n');
    for anomaly in report.anomalies() {
        out.push_str("!! ");
        out.push_str(&anomaly);
        out.push('\n');
    }
    out.push_str(&report.summary_line());
    out.push('\n');

    if !report.has_lcd {
        out.push_str("no loop-carried dependency detected; the throughput bound applies\n");
    }

    if report.lcds.len() > 1 {
        out.push_str("\nloop-carried dependencies, longest first:\n");
        for lcd in &report.lcds {
            out.push_str(&format!(
                "  {} cy via lines {}\n",
                lcd.total_latency.render(1),
                lcd.lines
                    .iter()
                    .map(|l| l.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
    }

    if !report.warnings.is_empty() {
        out.push_str("\nwarnings:\n");
        for w in &report.warnings {
            out.push_str("  - ");
            out.push_str(w);
            out.push('\n');
        }
    }

    out
}
