use std::path::Path;
use std::process::{Command, Output};

use lomo_core::corpus::{manifest_path, read_all, ContentPart, CurationManifest, Instance};
use lomo_core::metrics::{HsdHeader, HsdSample, HsdWriter, Role};
use serde_json::Value;

fn lomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lomo"))
        .args(args)
        .env_remove("LOMO_LATEX_CMD")
        .env_remove("LOMO_WORKERS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_corpus(path: &Path, instances: &[Instance]) {
    let lines: Vec<String> = instances.iter().map(|i| serde_json::to_string(i).unwrap()).collect();
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

fn fixture(dir: &Path) -> std::path::PathBuf {
    image::RgbImage::from_pixel(4, 4, image::Rgb([9, 9, 9]))
        .save(dir.join("pic.png"))
        .unwrap();
    let mut instances: Vec<Instance> = (0..8)
        .map(|i| {
            Instance::text_only(
                format!("t{i}"),
                format!("Question {i} asks something. It has detail. More detail here. Then $x^{i}$ appears. End."),
                "a",
            )
        })
        .collect();
    for i in 0..4 {
        instances.push(Instance {
            id: format!("v{i}"),
            parts: vec![ContentPart::image("pic.png"), ContentPart::text("What is shown?")],
            answer: "b".into(),
        });
    }
    let input = dir.join("in.jsonl");
    write_corpus(&input, &instances);
    input
}

#[test]
fn curate_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let output = dir.path().join("out.jsonl");
    let o = lomo(&["curate", "--in", s(&input), "--out", s(&output), "--seed", "3", "--rewrite-ratio", "0.5", "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["counts"]["total"], 12);
    assert_eq!(summary["counts"]["rewritten"], 4);
    assert_eq!(summary["counts"]["text_only_kept"], 4);
    assert_eq!(summary["counts"]["image_bearing_original"], 4);
    assert_eq!(read_all(&output).unwrap().len(), 12);
    let manifest = CurationManifest::read(&manifest_path(&output)).unwrap();
    assert_eq!(manifest.seed, 3);

    let text = lomo(&["stats", s(&output)]);
    assert!(text.status.success(), "{}", stderr(&text));
    let t = stdout(&text);
    assert!(t.contains("count identity: OK"), "{t}");
    assert!(t.contains("instances_per_sec"), "{t}");

    let json = lomo(&["stats", s(&manifest_path(&output)), "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["count_identity"], "OK");
    assert_eq!(v["counts"]["rewritten"], 4);
    let rewritten_row = t.lines().find(|l| l.trim_start().starts_with("rewritten")).unwrap();
    assert!(rewritten_row.trim_end().ends_with(" 4"));
}

#[test]
fn usage_and_validation_errors() {
    let o = lomo(&["curate", "--out", "x.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("o.jsonl");
    let o = lomo(&["curate", "--in", s(&input), "--out", s(&out), "--rewrite-ratio", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rewrite_ratio"), "{}", stderr(&o));
    let o = lomo(&["curate", "--in", s(&dir.path().join("missing.jsonl")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn workers_env_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("o.jsonl");
    let o = Command::new(env!("CARGO_BIN_EXE_lomo"))
        .args(["curate", "--in", s(&input), "--out", s(&out)])
        .env("LOMO_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("LOMO_WORKERS"));
}

#[test]
fn stats_flags_violated_identity() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let output = dir.path().join("out.jsonl");
    assert!(lomo(&["curate", "--in", s(&input), "--out", s(&output), "--no-distortion"]).status.success());
    let mpath = manifest_path(&output);
    let mut m: Value = serde_json::from_slice(&std::fs::read(&mpath).unwrap()).unwrap();
    m["counts"]["total"] = Value::from(99);
    std::fs::write(&mpath, serde_json::to_vec(&m).unwrap()).unwrap();
    let o = lomo(&["stats", s(&mpath)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("VIOLATED"));
}

#[test]
fn eval_render_and_ratio_match() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let rendered = dir.path().join("rendered.jsonl");
    let o = lomo(&["eval-render", "--in", s(&input), "--out", s(&rendered)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = read_all(&rendered).unwrap();
    assert_eq!(out.len(), 12);
    assert!(out.iter().all(|i| i.parts.iter().all(|p| p.is_image())));

    let matched = dir.path().join("matched.jsonl");
    let o = lomo(&["ratio-match", "--in", s(&input), "--out", s(&matched), "--target", "1:1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = read_all(&matched).unwrap();
    let images = out.iter().filter(|i| i.has_image()).count();
    assert_eq!((images, out.len() - images), (4, 4));

    let o = lomo(&["ratio-match", "--in", s(&input), "--out", s(&matched), "--target", "3:1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = lomo(&["ratio-match", "--in", s(&input), "--out", s(&matched), "--target", "0:1"]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_hsd(path: &Path) {
    let header = HsdHeader {
        n_layers: 2,
        hidden_dim: 2,
        n_samples: 3,
    };
    let mut w = HsdWriter::create(path, header).unwrap();
    let rows = |id: &str, t: [[f32; 2]; 3], v: [[f32; 2]; 3]| HsdSample {
        id: id.into(),
        roles: vec![Role::Textual, Role::Textual, Role::Textual, Role::Visual, Role::Visual, Role::Visual],
        layers: vec![t.iter().chain(&v).flatten().copied().collect(); 2],
    };
    w.write_sample(&rows("a", [[1.0, 0.0], [2.0, 0.5], [3.0, -0.5]], [[0.0, 1.0], [0.5, 2.0], [-0.5, 3.0]]))
        .unwrap();
    w.write_sample(&rows("b", [[1.0, 1.0], [1.5, 1.0], [1.0, 1.5]], [[1.0, 1.0], [1.0, 1.5], [1.5, 1.0]]))
        .unwrap();
    w.write_sample(&rows("c", [[1.0, 2.0], [1.0, 2.5], [1.5, 2.0]], [[-1.0, -2.0], [-1.0, -2.5], [-1.5, -2.0]]))
        .unwrap();
    w.finish().unwrap();
}

#[test]
fn metrics_on_hsd() {
    let dir = tempfile::tempdir().unwrap();
    let hsd = dir.path().join("dump.hsd");
    write_hsd(&hsd);
    let o = lomo(&["metrics", "mir", "--hsd", s(&hsd)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_layers"], 2);
    let per: Vec<f64> = v["per_layer_fid"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((v["mir"].as_f64().unwrap() - (per[0] + per[1]) / 2.0).abs() < 1e-12);

    let out = dir.path().join("pcd.json");
    let o = lomo(&["metrics", "pcd", "--hsd", s(&hsd), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["layer"], 1);
    assert_eq!(v["n_samples"], 3);
    let d: Vec<f64> = v["per_sample"].as_array().unwrap().iter().map(|x| x["d"].as_f64().unwrap()).collect();
    assert!(d[1].abs() < 1e-12);
    assert!((d[2] - 2.0).abs() < 1e-12);
    assert!(v["pcd_histogram"]["counts"].is_array());
}

#[test]
fn metrics_reject_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.hsd");
    std::fs::write(&bad, b"NOTANHSDFILE-------------").unwrap();
    let o = lomo(&["metrics", "mir", "--hsd", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not an HSD1 file"), "{}", stderr(&o));
    let o = lomo(&["metrics", "pcd", "--hsd", s(&bad), "--layer", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn decomposition_command() {
    let o = lomo(&["metrics", "decomp", "--p-x", "0.5,0.5", "--p-tx", "0.25,0.75", "--answer", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["kl"].as_f64().unwrap() - 0.14384).abs() < 1e-5);
    assert!((v["align_term"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases.jsonl");
    std::fs::write(
        &cases,
        "{\"p_x\": [0.2, 0.8], \"p_tx\": [0.5, 0.5], \"answer\": 1}\n{\"p_x\": [1.0, 0.0], \"p_tx\": [0.9, 0.1], \"answer\": 0}\n",
    )
    .unwrap();
    let o = lomo(&["metrics", "decomp", "--input", s(&cases)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);

    let o = lomo(&["metrics", "decomp", "--p-x", "0.5,0.6", "--p-tx", "0.5,0.5", "--answer", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
