//! Static SVG rendering of run-report content: score CDF curves, the
//! BIC-vs-k curve, and confusion-matrix heat grids. Rendering is pure — a
//! fixed report always produces byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use owtc_core::metrics::ConfusionMatrix;
use owtc_core::Result;
use serde::{Deserialize, Serialize};

use crate::report::RunReport;
use crate::scenario::save_json;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_B: f64 = 50.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_R: f64 = 20.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlotManifest {
    pub emitted: Vec<String>,
    pub omitted: BTreeMap<String, String>,
}

/// Writes every available plot for a report into `out_dir`, plus a
/// `plots_manifest.json` naming what was emitted or omitted and why.
pub fn emit_plots(report: &RunReport, out_dir: &Path) -> Result<PlotManifest> {
    fs::create_dir_all(out_dir)?;
    let mut manifest = PlotManifest {
        emitted: Vec::new(),
        omitted: BTreeMap::new(),
    };

    let cdf = svg_score_cdf(
        &report.scores.known_validation,
        &report.scores.unknown_traffic,
    );
    fs::write(out_dir.join("score_cdf.svg"), cdf)?;
    manifest.emitted.push("score_cdf.svg".into());

    match &report.clustering {
        Some(clustering) if !clustering.bic_table.is_empty() => {
            let svg = svg_bic_curve(
                &clustering
                    .bic_table
                    .iter()
                    .map(|row| (row.k, row.bic))
                    .collect::<Vec<_>>(),
                clustering.chosen_k,
            );
            fs::write(out_dir.join("bic_curve.svg"), svg)?;
            manifest.emitted.push("bic_curve.svg".into());
        }
        _ => {
            manifest.omitted.insert(
                "bic_curve.svg".into(),
                "no clustering ran (empty unknown set)".into(),
            );
        }
    }

    match &report.evaluation {
        Some(eval) => {
            fs::write(
                out_dir.join("confusion_pre.svg"),
                svg_confusion(&eval.pre_update_confusion, "original classifier"),
            )?;
            fs::write(
                out_dir.join("confusion_post.svg"),
                svg_confusion(&eval.post_update_confusion, "updated classifier"),
            )?;
            manifest.emitted.push("confusion_pre.svg".into());
            manifest.emitted.push("confusion_post.svg".into());
        }
        None => {
            manifest.omitted.insert(
                "confusion_pre.svg".into(),
                "no update ran in this scenario".into(),
            );
            manifest.omitted.insert(
                "confusion_post.svg".into(),
                "no update ran in this scenario".into(),
            );
        }
    }

    save_json(&manifest, &out_dir.join("plots_manifest.json"))?;
    Ok(manifest)
}

fn svg_header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx:.1}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\" ",
            "text-anchor=\"middle\">{title}</text>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        tx = WIDTH / 2.0,
        title = title
    )
}

fn axes(x_label: &str, y_label: &str) -> String {
    let x0 = MARGIN_L;
    let y0 = HEIGHT - MARGIN_B;
    let x1 = WIDTH - MARGIN_R;
    let y1 = MARGIN_T;
    format!(
        concat!(
            "<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x1:.1}\" y2=\"{y0:.1}\" stroke=\"black\"/>\n",
            "<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x0:.1}\" y2=\"{y1:.1}\" stroke=\"black\"/>\n",
            "<text x=\"{xm:.1}\" y=\"{yl:.1}\" font-family=\"sans-serif\" font-size=\"12\" ",
            "text-anchor=\"middle\">{x_label}</text>\n",
            "<text x=\"16\" y=\"{ym:.1}\" font-family=\"sans-serif\" font-size=\"12\" ",
            "text-anchor=\"middle\" transform=\"rotate(-90 16 {ym:.1})\">{y_label}</text>\n"
        ),
        x0 = x0,
        y0 = y0,
        x1 = x1,
        y1 = y1,
        xm = (x0 + x1) / 2.0,
        yl = HEIGHT - 12.0,
        ym = (y0 + y1) / 2.0,
        x_label = x_label,
        y_label = y_label
    )
}

fn to_px(x: f64, y: f64, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> (f64, f64) {
    let span_x = (x_max - x_min).max(1e-12);
    let span_y = (y_max - y_min).max(1e-12);
    let px = MARGIN_L + (x - x_min) / span_x * (WIDTH - MARGIN_L - MARGIN_R);
    let py = (HEIGHT - MARGIN_B) - (y - y_min) / span_y * (HEIGHT - MARGIN_T - MARGIN_B);
    (px, py)
}

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{x:.2},{y:.2}"))
        .collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        coords.join(" ")
    )
}

/// Empirical CDF as step points over [0, 1].
fn ecdf_points(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = sorted.len() as f64;
    let mut points = vec![(0.0, 0.0)];
    for (i, &v) in sorted.iter().enumerate() {
        points.push((v, i as f64 / n));
        points.push((v, (i + 1) as f64 / n));
    }
    points.push((1.0, 1.0));
    points
}

pub fn svg_score_cdf(known: &[f64], unknown: &[f64]) -> String {
    let mut out = svg_header("confidence score CDF: known vs unknown traffic");
    out.push_str(&axes("confidence score s*", "CDF"));
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let (px, _) = to_px(frac, 0.0, 0.0, 1.0, 0.0, 1.0);
        out.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"middle\">{frac:.2}</text>\n",
            y = HEIGHT - MARGIN_B + 14.0
        ));
        let (_, gy) = to_px(0.0, frac, 0.0, 1.0, 0.0, 1.0);
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{gy:.1}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"end\">{frac:.2}</text>\n",
            x = MARGIN_L - 6.0
        ));
    }
    if !known.is_empty() {
        let pts: Vec<(f64, f64)> = ecdf_points(known)
            .iter()
            .map(|&(x, y)| to_px(x, y, 0.0, 1.0, 0.0, 1.0))
            .collect();
        out.push_str(&polyline(&pts, "#33658a"));
    }
    if !unknown.is_empty() {
        let pts: Vec<(f64, f64)> = ecdf_points(unknown)
            .iter()
            .map(|&(x, y)| to_px(x, y, 0.0, 1.0, 0.0, 1.0))
            .collect();
        out.push_str(&polyline(&pts, "#c03221"));
    } else {
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"#c03221\">no unknown traffic in this run</text>\n",
            x = MARGIN_L + 10.0,
            y = MARGIN_T + 16.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{x:.1}\" y=\"{y1:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
         fill=\"#33658a\">known (S_c)</text>\n\
         <text x=\"{x:.1}\" y=\"{y2:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
         fill=\"#c03221\">unknown (S_u)</text>\n",
        x = MARGIN_L + 10.0,
        y1 = MARGIN_T + 34.0,
        y2 = MARGIN_T + 50.0
    ));
    out.push_str("</svg>\n");
    out
}

pub fn svg_bic_curve(table: &[(usize, f64)], chosen_k: usize) -> String {
    let mut out = svg_header("BIC vs cluster count k");
    out.push_str(&axes("k", "BIC"));
    let x_min = table.first().map_or(1.0, |&(k, _)| k as f64);
    let x_max = table.last().map_or(2.0, |&(k, _)| k as f64);
    let y_min = table.iter().map(|&(_, b)| b).fold(f64::INFINITY, f64::min);
    let y_max = table.iter().map(|&(_, b)| b).fold(f64::NEG_INFINITY, f64::max);
    let pts: Vec<(f64, f64)> = table
        .iter()
        .map(|&(k, b)| to_px(k as f64, b, x_min, x_max, y_min, y_max))
        .collect();
    out.push_str(&polyline(&pts, "#33658a"));
    for &(k, b) in table {
        let (px, py) = to_px(k as f64, b, x_min, x_max, y_min, y_max);
        let fill = if k == chosen_k { "#c03221" } else { "#33658a" };
        let radius = if k == chosen_k { 5.0 } else { 3.0 };
        out.push_str(&format!(
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"{radius}\" fill=\"{fill}\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"middle\">{k}</text>\n",
            y = HEIGHT - MARGIN_B + 14.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{x:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
         fill=\"#c03221\">chosen K = {chosen_k}</text>\n",
        x = MARGIN_L + 10.0,
        y = MARGIN_T + 16.0
    ));
    out.push_str("</svg>\n");
    out
}

pub fn svg_confusion(matrix: &ConfusionMatrix, subtitle: &str) -> String {
    let m = matrix.class_count;
    let grid = (WIDTH - MARGIN_L - MARGIN_R).min(HEIGHT - MARGIN_T - MARGIN_B);
    let cell = grid / m.max(1) as f64;
    let mut out = svg_header(&format!("confusion matrix ({subtitle})"));
    let max_count = matrix.counts.iter().copied().max().unwrap_or(1).max(1);
    for t in 0..m {
        for p in 0..m {
            let count = matrix.at(t, p);
            let intensity = count as f64 / max_count as f64;
            let shade = (255.0 - intensity * 175.0) as u8;
            let x = MARGIN_L + p as f64 * cell;
            let y = MARGIN_T + t as f64 * cell;
            out.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" \
                 fill=\"rgb({shade},{shade},255)\" stroke=\"#cccccc\"/>\n"
            ));
            if count > 0 {
                out.push_str(&format!(
                    "<text x=\"{cx:.2}\" y=\"{cy:.2}\" font-family=\"sans-serif\" \
                     font-size=\"10\" text-anchor=\"middle\">{count}</text>\n",
                    cx = x + cell / 2.0,
                    cy = y + cell / 2.0 + 3.0
                ));
            }
        }
    }
    for (i, name) in matrix.class_names.iter().enumerate() {
        let y = MARGIN_T + i as f64 * cell + cell / 2.0 + 3.0;
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"9\" \
             text-anchor=\"end\">{name}</text>\n",
            x = MARGIN_L - 4.0
        ));
        let cx = MARGIN_L + i as f64 * cell + cell / 2.0;
        out.push_str(&format!(
            "<text x=\"{cx:.2}\" y=\"{y2:.1}\" font-family=\"sans-serif\" font-size=\"9\" \
             text-anchor=\"middle\">{i}</text>\n",
            y2 = MARGIN_T + m as f64 * cell + 12.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{x:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"11\">\
         accuracy {acc:.4}</text>\n",
        x = MARGIN_L,
        y = HEIGHT - 10.0,
        acc = matrix.accuracy()
    ));
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_is_deterministic() {
        let known = vec![0.9, 0.95, 0.99, 0.97];
        let unknown = vec![0.4, 0.6, 0.3];
        assert_eq!(
            svg_score_cdf(&known, &unknown),
            svg_score_cdf(&known, &unknown)
        );
        let table = vec![(1, -10.0), (2, -55.0), (3, -60.0)];
        assert_eq!(svg_bic_curve(&table, 2), svg_bic_curve(&table, 2));
    }

    #[test]
    fn cdf_handles_empty_unknown_with_a_note() {
        let svg = svg_score_cdf(&[0.9, 0.8], &[]);
        assert!(svg.contains("no unknown traffic"));
    }

    #[test]
    fn confusion_svg_contains_counts() {
        let mut m = ConfusionMatrix::new(2, vec!["a".into(), "b".into()]);
        m.record(0, 0);
        m.record(1, 1);
        m.record(1, 0);
        let svg = svg_confusion(&m, "test");
        assert!(svg.contains(">a<") || svg.contains("a</text>"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
