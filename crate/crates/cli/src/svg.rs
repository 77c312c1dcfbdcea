//! Dependency-free SVG line plots of AUROC and AUPR against K, with the
//! plotted numbers repeated as a table under the panels.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::report::{fixed3, full, write_file, TableDoc, TableRow};

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 48.0;
const ROW_H: f64 = 16.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(K, AUROC, AUPR)`, starting at the baseline.
    pub points: Vec<(usize, f64, f64)>,
}

/// One series per non-baseline condition, each prefixed by the baseline.
pub fn series(doc: &TableDoc) -> Vec<Series> {
    let Some((base, rest)) = doc.rows.split_first() else {
        return Vec::new();
    };
    let point = |r: &TableRow| r.k_ood.parse::<usize>().ok().map(|k| (k, r.auroc, r.aupr));
    let mut out: Vec<Series> = Vec::new();
    for r in rest {
        let Some(p) = point(r) else { continue };
        match out.iter_mut().find(|s| s.label == r.condition) {
            Some(s) => s.points.push(p),
            None => out.push(Series {
                label: r.condition.clone(),
                points: point(base).into_iter().chain([p]).collect(),
            }),
        }
    }
    out
}

pub fn render(doc: &TableDoc) -> String {
    let series = series(doc);
    let ks: Vec<usize> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let (k_lo, k_hi) = match (ks.iter().min(), ks.iter().max()) {
        (Some(&a), Some(&b)) if a < b => (a as f64, b as f64),
        (Some(&a), _) => (a as f64 - 0.5, a as f64 + 0.5),
        _ => (0.0, 1.0),
    };
    let table_rows = series.iter().map(|s| s.points.len()).sum::<usize>();
    let width = 2.0 * PANEL_W + 3.0 * MARGIN;
    let height = PANEL_H + 2.0 * MARGIN + ROW_H * (table_rows as f64 + 2.0) + MARGIN;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        "<title>{} ({})</title>",
        escape(&doc.title),
        escape(&doc.metric)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (panel, (name, pick)) in [("AUROC", 1usize), ("AUPR", 2)].into_iter().enumerate() {
        let x0 = MARGIN + panel as f64 * (PANEL_W + MARGIN);
        let y0 = MARGIN;
        let px = |k: f64| x0 + (k - k_lo) / (k_hi - k_lo) * PANEL_W;
        let py = |v: f64| y0 + (1.0 - v) * PANEL_H;
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{PANEL_W:.2}" height="{PANEL_H:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{name} vs K</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 10.0
        );
        for tick in 0..=4 {
            let v = tick as f64 / 4.0;
            let _ = writeln!(
                s,
                r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{v:.2}</text>"##,
                y = py(v),
                x1 = x0 + PANEL_W,
                tx = x0 - 4.0,
                ty = py(v) + 4.0
            );
        }
        let mut kk: Vec<usize> = ks.clone();
        kk.sort_unstable();
        kk.dedup();
        for k in kk {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{k}</text>"#,
                px(k as f64),
                y0 + PANEL_H + 14.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">K (OOD)</text>"#,
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H + 30.0
        );
        for (i, ser) in series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = ser
                .points
                .iter()
                .map(|p| {
                    let v = if pick == 1 { p.1 } else { p.2 };
                    format!("{:.2},{:.2}", px(p.0 as f64), py(v))
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            );
            for p in &pts {
                let (cx, cy) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
            }
            if panel == 0 {
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
                    x0 + 8.0,
                    y0 + PANEL_H - 8.0 - 14.0 * i as f64,
                    escape(&ser.label)
                );
            }
        }
    }

    let mut y = MARGIN + PANEL_H + 2.0 * MARGIN;
    let cols = [MARGIN, MARGIN + 180.0, MARGIN + 240.0, MARGIN + 320.0];
    let _ = writeln!(s, r#"<g id="data">"#);
    for (x, head) in cols.iter().zip(["series", "K", "AUROC", "AUPR"]) {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y:.2}" font-weight="bold">{head}</text>"#
        );
    }
    for ser in &series {
        for p in &ser.points {
            y += ROW_H;
            let cells = [
                escape(&ser.label),
                p.0.to_string(),
                fixed3(p.1),
                fixed3(p.2),
            ];
            for (x, cell) in cols.iter().zip(cells) {
                let _ = writeln!(s, r#"<text x="{x:.2}" y="{y:.2}">{cell}</text>"#);
            }
        }
    }
    let _ = writeln!(s, "</g>\n</svg>");
    s
}

/// The plotted points at full precision.
pub fn curve_csv(doc: &TableDoc) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "k", "auroc", "aupr"])?;
    for ser in series(doc) {
        for (k, auroc, aupr) in ser.points {
            w.write_record([ser.label.clone(), k.to_string(), full(auroc), full(aupr)])?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_plot(doc: &TableDoc, out_dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write_file(&out_dir.join(format!("{}.svg", doc.name)), &render(doc))?,
        write_file(
            &out_dir.join(format!("{}_curve.csv", doc.name)),
            &curve_csv(doc)?,
        )?,
    ])
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cond: &str, k: usize, auroc: f64) -> TableRow {
        TableRow {
            condition: cond.into(),
            k_id: "4".into(),
            k_ood: k.to_string(),
            auroc,
            delta_auroc: 0.0,
            aupr: auroc / 2.0,
            delta_aupr: 0.0,
            aupr_baseline: 0.5,
            n_positive: 1,
            n_negative: 1,
        }
    }

    fn doc(rows: Vec<TableRow>) -> TableDoc {
        let mut d: TableDoc = serde_json::from_value(serde_json::json!({
            "kind": crate::report::TABLE_KIND, "name": "x", "title": "t", "metric": "m", "sweep": true, "rows": []
        }))
        .unwrap();
        d.rows = rows;
        d
    }

    #[test]
    fn single_target_gives_two_points() {
        let d = doc(vec![
            row("Baseline", 4, 0.6),
            row("OOD-only expansion", 5, 0.8),
        ]);
        let s = series(&d);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].points, vec![(4, 0.6, 0.3), (5, 0.8, 0.4)]);
        let svg = render(&d);
        assert_eq!(svg.matches("<circle").count(), 4);
    }

    #[test]
    fn output_is_deterministic() {
        let d = doc(vec![
            row("Baseline", 4, 0.6),
            row("OOD-only expansion", 5, 0.8),
            row("OOD-only expansion", 6, 0.9),
            row("Matched expansion", 5, 0.6),
        ]);
        assert_eq!(render(&d), render(&d));
        assert_eq!(series(&d).len(), 2);
        assert_eq!(curve_csv(&d).unwrap().lines().count(), 1 + 3 + 2);
    }
}
