use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use vacuity_cli::report::TableDoc;

fn vacuity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vacuity"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Simulated near-OOD population written under `dir/sim`.
fn simulated(dir: &TempDir) -> (PathBuf, PathBuf) {
    let cfg = dir.path().join("sim.json");
    fs::write(
        &cfg,
        r#"{"population":{"n_id":200,"n_ood":200,"ood_shape":5.0},"modes":["matched"]}"#,
    )
    .unwrap();
    let out = dir.path().join("sim");
    let o = vacuity(&["simulate", "--config", &s(&cfg), "--out", &s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (out.join("id.jsonl"), out.join("ood.jsonl"))
}

fn table(path: &Path) -> TableDoc {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn matched_expansion_deltas_render_zero() {
    let dir = TempDir::new().unwrap();
    let (id, ood) = simulated(&dir);
    let out = dir.path().join("m");
    let o = vacuity(&[
        "expand",
        &s(&id),
        &s(&ood),
        "--mode",
        "matched",
        "--k-max",
        "8",
        "--out",
        &s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let md = fs::read_to_string(out.join("expand_vacuity_id-pos_matched.md")).unwrap();
    let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| Matched")).collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let cells: Vec<&str> = r.split('|').map(str::trim).collect();
        assert_eq!((cells[5], cells[7]), ("0.000", "0.000"), "{r}");
    }
    assert!(!out.join("warnings.jsonl").exists());
}

#[test]
fn ood_only_auroc_column_non_decreasing() {
    let dir = TempDir::new().unwrap();
    let (id, ood) = simulated(&dir);
    let out = dir.path().join("o");
    let o = vacuity(&[
        "expand",
        &s(&id),
        &s(&ood),
        "--mode",
        "ood-only",
        "--k-max",
        "8",
        "--evidence",
        "0",
        "--out",
        &s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let doc = table(&out.join("expand_vacuity_id-pos_ood-only.json"));
    let aurocs: Vec<f64> = doc.rows.iter().map(|r| r.auroc).collect();
    assert_eq!(aurocs.len(), 5);
    assert!(aurocs.windows(2).all(|w| w[1] >= w[0]), "{aurocs:?}");
    let warnings = fs::read_to_string(out.join("warnings.jsonl")).unwrap();
    assert_eq!(warnings.lines().count(), 4);
    assert!(out.join("expand_vacuity_id-pos_ood-only.svg").exists());
}

#[test]
fn invariant_evidence_keeps_ood_only_flat() {
    let dir = TempDir::new().unwrap();
    let (id, ood) = simulated(&dir);
    let out = dir.path().join("i");
    let o = vacuity(&[
        "expand",
        &s(&id),
        &s(&ood),
        "--mode",
        "ood-only",
        "--k-max",
        "6",
        "--evidence",
        "invariant",
        "--out",
        &s(&out),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let doc = table(&out.join("expand_vacuity_id-pos_ood-only.json"));
    for r in &doc.rows {
        assert!(r.delta_auroc.abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn one_target_plot_has_two_points() {
    let dir = TempDir::new().unwrap();
    let (id, ood) = simulated(&dir);
    let out = dir.path().join("p");
    let o = vacuity(&[
        "expand",
        &s(&id),
        &s(&ood),
        "--mode",
        "ood-only",
        "--k-max",
        "5",
        "--out",
        &s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let curve = fs::read_to_string(out.join("expand_vacuity_id-pos_ood-only_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
    let svg = fs::read_to_string(out.join("expand_vacuity_id-pos_ood-only.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 4);
}

#[test]
fn outputs_are_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = vacuity(&[
            "simulate",
            "--seed",
            "9",
            "--out",
            &s(&out),
            "--format",
            "csv",
        ]);
        assert_eq!(code(&o), 0);
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert!(a.iter().any(|(n, _)| n.ends_with(".svg")));
}

#[test]
fn seed_flag_changes_population() {
    let dir = TempDir::new().unwrap();
    let read = |seed: &str| {
        let out = dir.path().join(seed);
        assert_eq!(
            code(&vacuity(&["simulate", "--seed", seed, "--out", &s(&out)])),
            0
        );
        fs::read(out.join("ood.jsonl")).unwrap()
    };
    assert_ne!(read("1"), read("2"));
}

#[test]
fn csv_numbers_carry_full_precision() {
    let dir = TempDir::new().unwrap();
    let (id, ood) = simulated(&dir);
    let out = dir.path().join("c");
    let o = vacuity(&[
        "metrics",
        &s(&id),
        &s(&ood),
        "--metric",
        "entropy",
        "--orientation",
        "ood-pos",
        "--format",
        "csv",
        "--out",
        &s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.join("metrics_entropy_ood-pos.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    for cell in &row[3..8] {
        let digits = cell
            .split('e')
            .next()
            .unwrap()
            .chars()
            .filter(char::is_ascii_digit)
            .count();
        assert!(digits >= 15, "{cell}");
    }
}

#[test]
fn restrict_reports_exclusions() {
    let dir = TempDir::new().unwrap();
    let (id, _) = simulated(&dir);
    let ood = dir.path().join("ood5.jsonl");
    let mut text = String::new();
    for i in 0..30 {
        text += &format!(
            "{{\"id\":\"o{i}\",\"group\":\"ood\",\"classes\":[\"A\",\"B\",\"C\",\"D\",\"E\"],\"evidence\":[{},1,2,3,{}],\"label\":{}}}\n",
            i % 7,
            i % 5,
            i % 5
        );
    }
    fs::write(&ood, text).unwrap();
    let out = dir.path().join("r");
    let o = vacuity(&[
        "restrict",
        &s(&id),
        &s(&ood),
        "--remove-class",
        "4",
        "--out",
        &s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = table(&out.join("restrict_vacuity_id-pos.json"));
    assert_eq!(doc.rows[0].k_ood, "5");
    assert_eq!(doc.rows[1].k_ood, "4");
    assert_eq!(doc.rows[1].n_negative, 24);
    assert!(doc.notes[0].starts_with("6 records excluded"));
    // Only the as-is run is mismatched.
    assert_eq!(
        fs::read_to_string(out.join("warnings.jsonl"))
            .unwrap()
            .lines()
            .count(),
        1
    );
}

#[test]
fn report_rerenders_tables() {
    let dir = TempDir::new().unwrap();
    simulated(&dir);
    let out = dir.path().join("rep");
    let o = vacuity(&[
        "report",
        &s(&dir.path().join("sim")),
        "--out",
        &s(&out),
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    assert!(out.join("simulate_vacuity_id-pos.csv").exists());
    assert!(out.join("simulate_vacuity_id-pos.svg").exists());
    assert!(fs::read_to_string(out.join("report.md"))
        .unwrap()
        .contains("| Baseline | 4 | 4 |"));
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(
        code(&vacuity(&["report", &s(&empty), "--out", &s(&out)])),
        1
    );
}

#[test]
fn train_toy_writes_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("t.json");
    fs::write(&cfg, r#"{"steps":200,"data":{"n_per_class":60}}"#).unwrap();
    let out = dir.path().join("t");
    let o = vacuity(&[
        "train-toy",
        "--config",
        &s(&cfg),
        "--out",
        &s(&out),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("train_toy.json")).unwrap()).unwrap();
    assert_eq!(v["steps"], 200);
    assert!(v["mean_far_vacuity"].as_f64().unwrap() > v["mean_id_vacuity"].as_f64().unwrap());
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&vacuity(&["frobnicate"])), 1);
    assert_eq!(code(&vacuity(&["audit", "--bogus"])), 1);
    assert_eq!(code(&vacuity(&["--help"])), 0);
    assert_eq!(code(&vacuity(&["--version"])), 0);

    let bad = dir.path().join("bad.jsonl");
    fs::write(
        &bad,
        "{\"id\":\"a\",\"group\":\"id\",\"classes\":[\"A\",\"B\"],\"evidence\":[1,2]}\n\
         {\"id\":\"b\",\"group\":\"id\",\"classes\":[\"A\",\"B\"],\"evidence\":[-1,2]}\n",
    )
    .unwrap();
    let o = vacuity(&[
        "audit",
        &s(&bad),
        &s(&bad),
        "--out",
        &s(&dir.path().join("x")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.jsonl:2:"));

    let good = dir.path().join("good.jsonl");
    fs::write(
        &good,
        "{\"id\":\"a\",\"group\":\"id\",\"classes\":[\"A\",\"B\"],\"evidence\":[1,2]}\n",
    )
    .unwrap();
    // An ID file passed where OOD records belong.
    let o = vacuity(&[
        "audit",
        &s(&good),
        &s(&good),
        "--out",
        &s(&dir.path().join("x")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("passed as ood"));

    assert_eq!(
        code(&vacuity(&[
            "simulate",
            "--config",
            &s(&dir.path().join("missing.json"))
        ])),
        1
    );
}
