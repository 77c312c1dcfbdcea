//! Result tables in the Condition / K_ID / K_OOD / AUROC / Δ / AUPR / Δ
//! layout, rendered as Markdown, CSV or JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vacuity_core::lab::{ExpansionTable, RestrictionOutcome};
use vacuity_core::DetectionResult;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Md,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Md => "md",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub condition: String,
    pub k_id: String,
    pub k_ood: String,
    pub auroc: f64,
    pub delta_auroc: f64,
    pub aupr: f64,
    pub delta_aupr: f64,
    pub aupr_baseline: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

impl TableRow {
    fn new(condition: impl Into<String>, r: &DetectionResult, reference: &DetectionResult) -> Self {
        TableRow {
            condition: condition.into(),
            k_id: r.k_id.to_string(),
            k_ood: r.k_ood.to_string(),
            auroc: r.auroc,
            delta_auroc: r.auroc - reference.auroc,
            aupr: r.aupr,
            delta_aupr: r.aupr - reference.aupr,
            aupr_baseline: r.aupr_baseline,
            n_positive: r.n_positive,
            n_negative: r.n_negative,
        }
    }
}

/// One experiment's table. Deltas are relative to the first row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDoc {
    pub kind: String,
    pub name: String,
    pub title: String,
    pub metric: String,
    /// Expansion sweeps get a plot.
    #[serde(default)]
    pub sweep: bool,
    pub rows: Vec<TableRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub const TABLE_KIND: &str = "vacuity-table";

impl TableDoc {
    fn new(name: impl Into<String>, title: impl Into<String>, metric: impl Into<String>) -> Self {
        TableDoc {
            kind: TABLE_KIND.to_string(),
            name: name.into(),
            title: title.into(),
            metric: metric.into(),
            sweep: false,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn detection(name: &str, result: &DetectionResult) -> Self {
        let mut doc = TableDoc::new(name, "OOD detection", result.metric_name.clone());
        doc.rows.push(TableRow::new("As-is", result, result));
        doc
    }

    /// Tables sharing one baseline are merged with the baseline row once.
    pub fn expansion(name: &str, tables: &[&ExpansionTable]) -> Self {
        let first = tables[0];
        let base = &first.baseline().result;
        let mut doc = TableDoc::new(
            name,
            "Effect of class-cardinality expansion",
            base.metric_name.clone(),
        );
        doc.sweep = true;
        doc.rows.push(TableRow::new("Baseline", base, base));
        for t in tables {
            for row in &t.rows[1..] {
                doc.rows
                    .push(TableRow::new(row.condition.label(), &row.result, base));
            }
        }
        doc
    }

    pub fn restriction(name: &str, out: &RestrictionOutcome) -> Self {
        let mut doc = TableDoc::new(name, "Class restriction", out.as_is.metric_name.clone());
        doc.rows
            .push(TableRow::new("As-is", &out.as_is, &out.as_is));
        doc.rows.push(TableRow::new(
            format!("Class {} removed", out.removed_class),
            &out.removed,
            &out.as_is,
        ));
        doc.notes.push(format!(
            "{} records excluded (gold label {})",
            out.excluded_ids.len(),
            out.removed_class
        ));
        doc
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Md => Ok(self.markdown()),
            Format::Csv => self.csv(),
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
        }
    }

    pub fn markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "## {} ({})\n", self.title, self.metric);
        s.push_str("| Condition | K_ID | K_OOD | AUROC | Δ | AUPR | Δ |\n");
        s.push_str("|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r.condition,
                r.k_id,
                r.k_ood,
                fixed3(r.auroc),
                fixed3(r.delta_auroc),
                fixed3(r.aupr),
                fixed3(r.delta_aupr)
            );
        }
        if let Some(r) = self.rows.first() {
            let _ = writeln!(s, "\nAUPR baseline (ID ratio): {}", fixed3(r.aupr_baseline));
        }
        for n in &self.notes {
            let _ = writeln!(s, "\n{n}");
        }
        s
    }

    fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "condition",
            "k_id",
            "k_ood",
            "auroc",
            "delta_auroc",
            "aupr",
            "delta_aupr",
            "aupr_baseline",
            "n_positive",
            "n_negative",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.condition.clone(),
                r.k_id.clone(),
                r.k_ood.clone(),
                full(r.auroc),
                full(r.delta_auroc),
                full(r.aupr),
                full(r.delta_aupr),
                full(r.aupr_baseline),
                r.n_positive.to_string(),
                r.n_negative.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Three decimals, with negative zero shown unsigned.
pub fn fixed3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Seventeen significant digits.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes the JSON form always and the requested human form alongside.
pub fn emit_table(doc: &TableDoc, out_dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    let mut written = vec![write_file(
        &out_dir.join(format!("{}.json", doc.name)),
        &doc.render(Format::Json)?,
    )?];
    if format != Format::Json {
        let path = out_dir.join(format!("{}.{}", doc.name, format.extension()));
        written.push(write_file(&path, &doc.render(format)?)?);
    }
    if doc.sweep {
        written.extend(crate::svg::emit_plot(doc, out_dir)?);
    }
    Ok(written)
}

/// Reads every table JSON in `dir`, sorted by file name.
pub fn load_tables(dir: &Path) -> Result<Vec<TableDoc>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    let mut docs = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let value: serde_json::Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if value.get("kind").and_then(|k| k.as_str()) == Some(TABLE_KIND) {
            docs.push(serde_json::from_value(value)?);
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use vacuity_core::metrics::Cardinality;

    fn result(auroc: f64, aupr: f64, k: usize) -> DetectionResult {
        DetectionResult {
            auroc,
            aupr,
            aupr_baseline: 0.5,
            n_positive: 2,
            n_negative: 2,
            metric_name: "vacuity:id-pos".into(),
            k_id: Cardinality::Uniform(4),
            k_ood: Cardinality::Uniform(k),
        }
    }

    #[test]
    fn negative_zero_is_unsigned() {
        assert_eq!(fixed3(-0.0), "0.000");
        assert_eq!(fixed3(-1e-9), "0.000");
        assert_eq!(fixed3(-0.0006), "-0.001");
        assert_eq!(fixed3(0.5704), "0.570");
    }

    #[test]
    fn full_precision_round_trips() {
        for x in [0.1, 1.0 / 3.0, 0.570_123_456_789_012, 1e-300] {
            let s = full(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
            assert!(mantissa.len() >= 15);
        }
    }

    #[test]
    fn markdown_layout() {
        let a = result(0.57, 0.351, 4);
        let b = result(0.842, 0.5, 5);
        let mut doc = TableDoc::detection("t", &a);
        doc.rows.push(TableRow::new("OOD-only expansion", &b, &a));
        let md = doc.markdown();
        assert!(md.contains("| Condition | K_ID | K_OOD | AUROC | Δ | AUPR | Δ |"));
        assert!(md.contains("| As-is | 4 | 4 | 0.570 | 0.000 | 0.351 | 0.000 |"));
        assert!(md.contains("| OOD-only expansion | 4 | 5 | 0.842 | 0.272 | 0.500 | 0.149 |"));
    }

    #[test]
    fn json_mirror_round_trips() {
        let doc = TableDoc::detection("t", &result(1.0 / 3.0, 0.7, 4));
        let back: TableDoc = serde_json::from_str(&doc.render(Format::Json).unwrap()).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn csv_has_header_and_full_digits() {
        let doc = TableDoc::detection("t", &result(1.0 / 3.0, 0.7, 4));
        let csv = doc.render(Format::Csv).unwrap();
        let mut lines = csv.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("condition,k_id,k_ood,auroc"));
        assert!(lines.next().unwrap().contains("3.3333333333333331e-1"));
    }
}
