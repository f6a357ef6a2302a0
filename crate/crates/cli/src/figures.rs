//! Deterministic SVG figures with CSV twins. Grouped bars for per-gender
//! medians, a bubble chart for the category regression (circle area scales
//! with |coefficient|, significance marks annotated). SVG keeps goldens
//! text-diffable.

use std::fmt::Write as _;
use std::path::Path;

use storyaudit::metrics::CategoryRegression;

use crate::error::CliError;
use crate::stages::MedianEntry;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

/// All plotted numbers go through this formatter so the CSV twin matches
/// the SVG exactly.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.6}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

fn svg_header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" ",
            "font-family=\"sans-serif\">{title}</text>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        tx = WIDTH / 2.0,
        title = title
    )
}

/// Grouped-bar chart for per-gender medians. One group per entry, two bars
/// (F then M). Values may be negative; bars grow from the zero line.
pub fn grouped_bar_svg(title: &str, entries: &[(String, Option<f64>, Option<f64>)]) -> String {
    let mut svg = svg_header(title);
    let mut extent = 0.0f64;
    for (_, f, m) in entries {
        for v in [f, m].into_iter().flatten() {
            extent = extent.max(v.abs());
        }
    }
    if extent == 0.0 {
        extent = 1.0;
    }
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let zero_y = MARGIN + plot_h / 2.0;
    let scale = (plot_h / 2.0) / extent;
    let group_w = (WIDTH - 2.0 * MARGIN) / entries.len().max(1) as f64;
    let bar_w = (group_w * 0.3).min(42.0);
    let _ = writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#555\"/>",
        m = MARGIN,
        y = fmt_value(zero_y),
        x2 = WIDTH - MARGIN
    );
    for (i, (label, f, m)) in entries.iter().enumerate() {
        let center = MARGIN + group_w * (i as f64 + 0.5);
        for (offset, value, color, who) in [
            (-bar_w, f, "#c2607d", "F"),
            (0.0, m, "#4a7db5", "M"),
        ] {
            let Some(value) = value else { continue };
            let h = value.abs() * scale;
            let y = if *value >= 0.0 { zero_y - h } else { zero_y };
            let _ = writeln!(
                svg,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{h}\" fill=\"{color}\"><title>{who} {v}</title></rect>",
                x = fmt_value(center + offset),
                y = fmt_value(y),
                w = fmt_value(bar_w),
                h = fmt_value(h),
                v = fmt_value(*value),
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">{label}</text>",
            x = fmt_value(center),
            y = HEIGHT - MARGIN + 20.0,
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{x}\" y=\"44\" font-size=\"12\" font-family=\"sans-serif\"><tspan fill=\"#c2607d\">\u{25a0} F</tspan>  <tspan fill=\"#4a7db5\">\u{25a0} M</tspan></text>",
        x = MARGIN
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes one grouped-bar figure plus its CSV twin.
pub fn emit_median_figure(
    dir: &Path,
    stem: &str,
    title: &str,
    entries: &[(String, Option<f64>, Option<f64>)],
) -> Result<(), CliError> {
    let svg = grouped_bar_svg(title, entries);
    write_file(&dir.join(format!("{stem}.svg")), &svg)?;
    let mut csv = String::from("label,median_z_f,median_z_m\n");
    for (label, f, m) in entries {
        let f = f.map(fmt_value).unwrap_or_default();
        let m = m.map(fmt_value).unwrap_or_default();
        let _ = writeln!(csv, "{label},{f},{m}");
    }
    write_file(&dir.join(format!("{stem}.csv")), &csv)
}

/// Bubble chart over regression categories: x = category, y fixed per
/// direction (F above, M below), circle area proportional to the absolute
/// coefficient, significance mark appended to the label.
pub fn emit_regression_figure(
    dir: &Path,
    rows: &[&CategoryRegression],
) -> Result<(), CliError> {
    let mut svg = svg_header("Motivation categories by gender");
    let max_coef = rows
        .iter()
        .filter_map(|r| r.coefficient)
        .map(f64::abs)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let band_f = MARGIN + (HEIGHT - 2.0 * MARGIN) * 0.3;
    let band_m = MARGIN + (HEIGHT - 2.0 * MARGIN) * 0.7;
    let group_w = (WIDTH - 2.0 * MARGIN) / rows.len().max(1) as f64;
    let max_radius = (group_w * 0.4).min(28.0);
    for (i, row) in rows.iter().enumerate() {
        let Some(coefficient) = row.coefficient else {
            continue;
        };
        let x = MARGIN + group_w * (i as f64 + 0.5);
        let (y, color) = if coefficient >= 0.0 {
            (band_f, "#c2607d")
        } else {
            (band_m, "#4a7db5")
        };
        let radius = max_radius * (coefficient.abs() / max_coef).sqrt();
        let _ = writeln!(
            svg,
            "<circle cx=\"{x}\" cy=\"{y}\" r=\"{r}\" fill=\"{color}\" fill-opacity=\"0.8\"><title>{c}</title></circle>",
            x = fmt_value(x),
            y = fmt_value(y),
            r = fmt_value(radius),
            c = fmt_value(coefficient),
        );
        let mark = row.significance.mark();
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">{label}{mark}</text>",
            x = fmt_value(x),
            y = HEIGHT - MARGIN + 20.0,
            label = row.category,
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{x}\" y=\"44\" font-size=\"12\" font-family=\"sans-serif\">circle area \u{221d} |coefficient|; F above, M below</text>",
        x = MARGIN
    );
    svg.push_str("</svg>\n");
    write_file(&dir.join("regression.svg"), &svg)?;

    let mut csv = String::from("category,coefficient,p_value,significance\n");
    for row in rows {
        let Some(coefficient) = row.coefficient else {
            continue;
        };
        let p = row.p_value.map(fmt_value).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            row.category,
            fmt_value(coefficient),
            p,
            row.significance.mark()
        );
    }
    write_file(&dir.join("regression.csv"), &csv)
}

/// Entries for one median figure, in artifact order.
pub fn median_entries(
    entries: &[MedianEntry],
    metric: Option<&str>,
) -> Vec<(String, Option<f64>, Option<f64>)> {
    entries
        .iter()
        .filter(|e| metric.map(|m| e.metric == m).unwrap_or(true))
        .map(|e| {
            let label = if metric.is_some() {
                e.axis.clone()
            } else {
                e.metric.clone()
            };
            (label, e.median_z_f, e.median_z_m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_and_csv_share_formatting() {
        let entries = vec![
            ("intellect".to_string(), Some(0.123456789), Some(-0.2)),
            ("power".to_string(), None, Some(0.4)),
        ];
        let svg = grouped_bar_svg("t", &entries);
        assert!(svg.contains("0.123457"));
        let dir = tempfile::tempdir().unwrap();
        emit_median_figure(dir.path(), "assoc", "t", &entries).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("assoc.csv")).unwrap();
        assert!(csv.contains("intellect,0.123457,-0.200000"));
        assert!(csv.contains("power,,0.400000"));
    }

    #[test]
    fn figures_are_deterministic() {
        let entries = vec![("valence".to_string(), Some(0.5), Some(-0.5))];
        assert_eq!(
            grouped_bar_svg("t", &entries),
            grouped_bar_svg("t", &entries)
        );
    }
}
