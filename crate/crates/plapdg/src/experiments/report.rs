//! CSV, config and SVG emission for convergence reports.
//!
//! Output is fully deterministic for a fixed report: floats are written with
//! Rust's shortest-roundtrip formatting and rows in the report's order.

use super::study::{ConvergenceReport, StudyKind};
use crate::error::StudyError;
use std::fmt::Write as _;
use std::path::Path;

/// Writes errors.csv, slopes.csv, config.json and one SVG per error kind
/// into `out_dir`. Empty reports produce header-only CSVs and no SVG.
pub fn emit_report(report: &ConvergenceReport, out_dir: impl AsRef<Path>) -> Result<(), StudyError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;

    let mut errors_csv =
        String::from("example,p,r,h_or_r,quasi_norm_error,broken_norm_error,newton_iters,wall_ms\n");
    for cell in &report.cells {
        let h_or_r = match report.config.study {
            StudyKind::HVersion => format!("{}", cell.h_max),
            StudyKind::PVersion => format!("{}", cell.r),
        };
        writeln!(
            errors_csv,
            "{},{},{},{},{},{},{},{}",
            cell.example,
            cell.p,
            cell.r,
            h_or_r,
            cell.quasi_norm_error,
            cell.broken_norm_error,
            cell.newton_iters,
            cell.wall_ms
        )
        .expect("writing to a string cannot fail");
    }
    std::fs::write(out_dir.join("errors.csv"), errors_csv)?;

    let mut slopes_csv = String::from("example,p,r,study,error_kind,slope,r_squared\n");
    for fit in &report.slopes {
        writeln!(
            slopes_csv,
            "{},{},{},{},{},{},{}",
            report.config.example,
            fit.p,
            fit.r,
            match report.config.study {
                StudyKind::HVersion => "h",
                StudyKind::PVersion => "p",
            },
            fit.error_kind,
            fit.slope,
            fit.r_squared
        )
        .expect("writing to a string cannot fail");
    }
    std::fs::write(out_dir.join("slopes.csv"), slopes_csv)?;

    let config_json =
        serde_json::to_string_pretty(&report.config).expect("config serialization cannot fail");
    std::fs::write(out_dir.join("config.json"), config_json)?;

    if !report.cells.is_empty() {
        for (kind, label) in [
            ("quasi_norm", "quasi-norm error"),
            ("broken_norm", "broken-norm error"),
        ] {
            let svg = render_svg(report, kind, label);
            let study = match report.config.study {
                StudyKind::HVersion => "study_h",
                StudyKind::PVersion => "study_p",
            };
            std::fs::write(out_dir.join(format!("{study}_{kind}.svg")), svg)?;
        }
    }
    Ok(())
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    fit: Option<(f64, f64)>,
}

/// A self-contained static SVG: log-scaled axes, one marker series per
/// (p, r) group and dashed least-squares lines where a fit exists.
fn render_svg(report: &ConvergenceReport, kind: &str, label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 460.0;
    const ML: f64 = 70.0;
    const MR: f64 = 30.0;
    const MT: f64 = 40.0;
    const MB: f64 = 60.0;
    let is_h = report.config.study == StudyKind::HVersion;
    let extract = |c: &super::study::CellResult| -> f64 {
        if kind == "quasi_norm" {
            c.quasi_norm_error
        } else {
            c.broken_norm_error
        }
    };

    // Group cells into series by (p, r) for h-studies and by p for p-studies.
    let mut series: Vec<Series> = Vec::new();
    for cell in &report.cells {
        let label = if is_h {
            format!("p = {}, r = {}", cell.p, cell.r)
        } else {
            format!("p = {}", cell.p)
        };
        let x = if is_h { cell.h_max } else { cell.r as f64 };
        let y = extract(cell);
        if y <= 0.0 {
            continue;
        }
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((x, y)),
            None => series.push(Series {
                label,
                points: vec![(x, y)],
                fit: None,
            }),
        }
    }
    for s in &mut series {
        if s.points.len() >= 2 {
            let scale = if is_h {
                super::study::FitScale::LogLog
            } else {
                super::study::FitScale::SemiLogY
            };
            if let Ok((slope, _)) = super::study::fit_slope(&s.points, scale) {
                // Intercept through the mean of the transformed data.
                let n = s.points.len() as f64;
                let mx = s
                    .points
                    .iter()
                    .map(|&(x, _)| if is_h { x.ln() } else { x })
                    .sum::<f64>()
                    / n;
                let my = s.points.iter().map(|&(_, y)| y.ln()).sum::<f64>() / n;
                s.fit = Some((slope, my - slope * mx));
            }
        }
    }

    let tx = |x: f64| if is_h { x.ln() } else { x };
    let all_x: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|&(x, _)| tx(x))).collect();
    let all_y: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|&(_, y)| y.ln()))
        .collect();
    let (x_lo, x_hi) = bounds(&all_x);
    let (y_lo, y_hi) = bounds(&all_y);
    let px = |x: f64| ML + (x - x_lo) / (x_hi - x_lo) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let palette = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
    ];
    let mut svg = String::new();
    write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    // Axes.
    write!(
        svg,
        r#"<line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/>"#,
        H - MB,
        W - MR,
        H - MB,
        H - MB
    )
    .unwrap();
    let x_label = if is_h { "mesh size h (log)" } else { "degree r" };
    write!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{x_label}</text>"#,
        0.5 * (ML + W - MR),
        H - 18.0
    )
    .unwrap();
    write!(
        svg,
        r#"<text x="20" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 20 {})">{label} (log)</text>"#,
        0.5 * H,
        0.5 * H
    )
    .unwrap();
    write!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">example {} {} convergence</text>"#,
        0.5 * W,
        report.config.example,
        if is_h { "h-version" } else { "p-version" }
    )
    .unwrap();

    // Tick marks: powers of ten on y, data points on x.
    let mut tick = y_lo.ceil();
    while tick <= y_hi {
        let decade = tick / std::f64::consts::LN_10;
        if (decade - decade.round()).abs() < 0.5 / std::f64::consts::LN_10 {
            let y = py(tick);
            write!(
                svg,
                r#"<line x1="{}" y1="{y}" x2="{ML}" y2="{y}" stroke="black"/><text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">1e{}</text>"#,
                ML - 5.0,
                ML - 8.0,
                y + 4.0,
                decade.round() as i64
            )
            .unwrap();
        }
        tick += 1.0;
    }

    for (s_idx, s) in series.iter().enumerate() {
        let color = palette[s_idx % palette.len()];
        if let Some((slope, intercept)) = s.fit {
            let y0 = intercept + slope * x_lo;
            let y1 = intercept + slope * x_hi;
            write!(
                svg,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-dasharray="5 3" stroke-width="1"/>"#,
                px(x_lo),
                py(y0),
                px(x_hi),
                py(y1)
            )
            .unwrap();
        }
        for &(x, y) in &s.points {
            write!(
                svg,
                r#"<circle cx="{}" cy="{}" r="4" fill="{color}"/>"#,
                px(tx(x)),
                py(y.ln())
            )
            .unwrap();
        }
        let legend_y = MT + 16.0 * s_idx as f64;
        write!(
            svg,
            r#"<circle cx="{}" cy="{legend_y}" r="4" fill="{color}"/><text x="{}" y="{}" font-family="sans-serif" font-size="11">{}{}</text>"#,
            W - MR - 150.0,
            W - MR - 140.0,
            legend_y + 4.0,
            s.label,
            match s.fit {
                Some((slope, _)) => format!(" (slope {slope:.2})"),
                None => String::new(),
            }
        )
        .unwrap();
    }
    svg.push_str("</svg>");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if (hi - lo).abs() < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}
