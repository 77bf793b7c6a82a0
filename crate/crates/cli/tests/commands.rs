use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use swp_core::dataset::SyntheticConfig;
use swp_core::imaging::{save_png, Image};

fn swp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config() -> SyntheticConfig {
    SyntheticConfig {
        seed: 5,
        videos: 5,
        frames_per_video: 20,
        width: 200,
        height: 180,
        radius_min: 25,
        radius_max: 40,
        margin: 10,
        ..SyntheticConfig::default()
    }
}

fn synth_corpus(dir: &Path) -> PathBuf {
    let cfg = dir.join("synth.json");
    std::fs::write(&cfg, serde_json::to_string(&small_config()).unwrap()).unwrap();
    let out = dir.join("corpus");
    let o = swp(&["synth", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("5 videos x 20 frames"));
    out.join("manifest.json")
}

fn only_run_dir(out: &Path) -> PathBuf {
    let dirs: Vec<PathBuf> = std::fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth_corpus(a.path());
    synth_corpus(b.path());
    for rel in ["manifest.json", "v03/frame_00007.png", "v03/ground_truth.jsonl"] {
        let x = std::fs::read(a.path().join("corpus").join(rel)).unwrap();
        let y = std::fs::read(b.path().join("corpus").join(rel)).unwrap();
        assert_eq!(x, y, "{rel}");
    }
}

#[test]
fn invalid_synth_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"radius_min": 60, "radius_max": 20}"#).unwrap();
    let o = swp(&["synth", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("c").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn gate_replay_selects_seven() {
    let o = swp(&["gate"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("7 selected:"), "{text}");
    assert!(text.contains("Inception V3") && text.contains("exception"));
    assert!(text.contains("80.98") || text.contains("P1_BA"));
}

#[test]
fn detection_reports() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_corpus(dir.path());
    let m = manifest.to_str().unwrap();

    let out = dir.path().join("manual");
    let o = swp(&["detect", "--manifest", m, "--detector", "manual", "--window", "2:6", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = only_run_dir(&out);
    let rows = jsonl(&run.join("detections.jsonl"));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["iou"] == 1.0));
    assert!(run.join("run.json").is_file());
    assert!(stdout(&o).contains("100.00"));

    let out = dir.path().join("h30");
    let o = swp(&["detect", "--manifest", m, "--detector", "h30", "--window", "2:6", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = jsonl(&only_run_dir(&out).join("detections.jsonl"));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["iou"].as_f64().unwrap() > 0.0), "{rows:?}");
    assert!(rows.iter().all(|r| r["detector"] == "H30"));
}

#[test]
fn missing_manifest_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = swp(&["detect", "--manifest", "/nonexistent/manifest.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn blank_videos_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    for v in ["a", "b"] {
        let d = frames.join(v);
        std::fs::create_dir_all(&d).unwrap();
        for i in 1..=4 {
            save_png(&Image::filled(200, 180, 120), &d.join(format!("img{i}.png"))).unwrap();
        }
    }
    let mdir = dir.path().join("m");
    let o = swp(&["ingest", "--frames", frames.to_str().unwrap(), "--out", mdir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = mdir.join("manifest.json");
    let o = swp(&[
        "detect", "--manifest", manifest.to_str().unwrap(), "--window", "1:4", "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn ingest_reports_gaps_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("frames").join("v");
    std::fs::create_dir_all(&d).unwrap();
    for i in [1, 2, 4] {
        save_png(&Image::filled(8, 8, 0), &d.join(format!("f{i}.png"))).unwrap();
    }
    let o = swp(&[
        "ingest", "--frames", dir.path().join("frames").to_str().unwrap(), "--out",
        dir.path().join("m").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[3]"));
}

#[test]
fn e2e_manual_oracle_is_perfect_and_boxplot_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_corpus(dir.path());
    let out = dir.path().join("e2e");
    let o = swp(&[
        "e2e", "--manifest", manifest.to_str().unwrap(), "--detector", "manual", "--oracle", "--window", "2:6",
        "--classify-from", "7", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("pooled Top-1 100.00"), "{}", stdout(&o));
    let run = only_run_dir(&out);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(run.join("e2e.json")).unwrap()).unwrap();
    assert_eq!(report["pooled"]["top1"], 100.0);
    assert_eq!(report["videos"].as_array().unwrap().len(), 5);
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(run.join("run.json")).unwrap()).unwrap();
    assert_eq!(rec["config"]["e2e"]["classify_from"], 7);
    assert!(rec["versions"]["swp_core"].is_string());

    let o = swp(&["boxplot", "--report", run.join("e2e.json").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("median 100.00"), "{}", stdout(&o));

    let o = swp(&[
        "e2e", "--manifest", manifest.to_str().unwrap(), "--oracle", "--window", "2:6", "--classify-from", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_and_grid_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_corpus(dir.path());
    let m = manifest.to_str().unwrap();
    let cfg = dir.path().join("train.json");
    std::fs::write(&cfg, r#"{"name":"tiny","epochs":2,"input_size":16,"batch_size":4,"seed":1}"#).unwrap();
    let out = dir.path().join("train");
    let o = swp(&[
        "train", "--manifest", m, "--config", cfg.to_str().unwrap(), "--sizes", "9,3,3", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = only_run_dir(&out);
    assert!(run.file_name().unwrap().to_str().unwrap().ends_with("-seed1"));
    for f in ["best.json", "last.json", "history.csv", "run.json", "summary.txt"] {
        assert!(run.join(f).is_file(), "{f}");
    }

    let e2e = dir.path().join("e2e");
    let o = swp(&[
        "e2e", "--manifest", m, "--detector", "h30", "--checkpoint", run.join("best.json").to_str().unwrap(),
        "--window", "2:6", "--classify-from", "7", "--out", e2e.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let grid = dir.path().join("grid.json");
    std::fs::write(
        &grid,
        r#"[{"name":"a","epochs":1,"input_size":16,"batch_size":4,"seed":1},
            {"name":"b","epochs":2,"input_size":16,"batch_size":4,"seed":2,"optimizer":{"kind":"adam"}}]"#,
    )
    .unwrap();
    let out = dir.path().join("grid");
    let o = swp(&[
        "grid", "--manifest", m, "--grid", grid.to_str().unwrap(), "--sizes", "9,3,3", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("P2_BA") && text.contains("P2_AVG"), "{text}");
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(only_run_dir(&out).join("grid.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn learned_detector_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_corpus(dir.path());
    let m = manifest.to_str().unwrap();
    let cfg = dir.path().join("reg.json");
    std::fs::write(&cfg, r#"{"name":"reg","epochs":2,"input_size":32,"batch_size":4,"lr_init":0.01}"#).unwrap();
    let out = dir.path().join("reg");
    let o = swp(&[
        "train", "--regressor", "--manifest", m, "--config", cfg.to_str().unwrap(), "--sizes", "9,3,3",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ck = only_run_dir(&out).join("regressor.json");
    let det = dir.path().join("det");
    let o = swp(&[
        "detect", "--manifest", m, "--detector", "learned", "--checkpoint", ck.to_str().unwrap(), "--window",
        "2:6", "--out", det.to_str().unwrap(),
    ]);
    // An undertrained regressor may produce degenerate boxes on every frame.
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = jsonl(&only_run_dir(&det).join("detections.jsonl"));
    assert!(rows.iter().all(|r| r["detector"] == "learned"));
}

#[test]
fn port_in_use_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_corpus(dir.path());
    let listener = std::net::TcpListener::bind("0.0.0.0:0").unwrap();
    let port = listener.local_addr().unwrap().port().to_string();
    let o = swp(&[
        "serve", "--manifest", manifest.to_str().unwrap(), "--annotations",
        dir.path().join("ann").to_str().unwrap(), "--port", &port,
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
