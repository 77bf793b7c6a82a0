use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use swp_core::cnn::{
    load_checkpoint, save_checkpoint, train, train_regressor, Classifier, ModelSpec, Network, TrainConfig,
};
use swp_core::dataset::{
    agreement_report, balanced_sample, build_corpus, build_splits, ingest_frames, read_ground_truth,
    synth_generate, AnnotationStore, CorpusVideo, DatasetManifest, DiskVideo, FrameRef, FrameSource,
    GroundTruthRecord, Majority, Split, SyntheticConfig, GROUND_TRUTH_FILE, MANIFEST_FILE,
};
use swp_core::detect::{circle_to_box, time_detection, DetectionReport, DetectorKind, HoughConfig, PaddingVariant};
use swp_core::eval::{
    boxplot, e2e_suite, grid_run, iou, phase1_gate, phase1_reference_exceptions, phase1_reference_rows,
    BoxplotSummary, E2EConfig, FrameTruth, GateInput, GateReason, GateThresholds, SuiteReport, SuiteVideo,
    VideoStatus,
};
use swp_core::imaging::{BoundingBox, Image};

use crate::cli::*;
use crate::failure::Failure;
use crate::report::{fmt2, fmt2_opt, table};
use crate::run::RunDir;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Ingest(a) => ingest(&a),
        Command::Detect(a) => detect(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Grid(a) => grid(&a),
        Command::Gate(a) => gate(&a),
        Command::E2e(a) => e2e(&a),
        Command::Boxplot(a) => boxplot_cmd(&a),
        Command::Serve(a) => crate::server::serve(&a),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())).into())
}

fn config_err(e: swp_core::Error) -> anyhow::Error {
    Failure::Config(e.to_string()).into()
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    if !path.is_file() {
        bail!(Failure::Config(format!("manifest {} does not exist", path.display())));
    }
    let m = DatasetManifest::load(path).map_err(config_err)?;
    m.validate().map_err(config_err)?;
    Ok(m)
}

fn ground_truth(manifest: &DatasetManifest, video: &str) -> Result<Option<BTreeMap<u32, GroundTruthRecord>>> {
    let entry = manifest.video(video).context("video not in manifest")?;
    let path = manifest.frame_dir(entry).join(GROUND_TRUTH_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    Ok(Some(read_ground_truth(&path)?))
}

fn open_videos(manifest: &DatasetManifest) -> Result<Vec<DiskVideo>> {
    manifest
        .videos
        .iter()
        .map(|v| manifest.open(&v.video_id).map_err(config_err))
        .collect()
}

fn load_window(source: &dyn FrameSource, w: Window) -> Result<Vec<Image>> {
    if w.to > source.frame_count() {
        bail!(Failure::Config(format!(
            "{}: window {}:{} exceeds {} frames",
            source.video_id(),
            w.from,
            w.to,
            source.frame_count()
        )));
    }
    (w.from..=w.to).map(|i| Ok(source.frame(i)?)).collect()
}

fn manual_boxes(path: Option<&Path>) -> Result<Option<HashMap<String, BoundingBox>>> {
    path.map(read_json).transpose()
}

/// Detector for one video; manual boxes fall back to the ground-truth box at `frame`.
fn detector_for(
    choice: DetectorChoice,
    pad: Option<PaddingVariant>,
    learned: Option<&Arc<Network>>,
    boxes: Option<&HashMap<String, BoundingBox>>,
    truth: Option<&BTreeMap<u32, GroundTruthRecord>>,
    video: &str,
    frame: u32,
) -> Result<DetectorKind> {
    Ok(match choice {
        DetectorChoice::H20 | DetectorChoice::H30 | DetectorChoice::H40 => {
            DetectorKind::Hough(HoughConfig::default(), pad.or(choice.pad()).expect("hough padding"))
        }
        DetectorChoice::Learned => DetectorKind::LearnedRegressor(
            learned
                .cloned()
                .ok_or_else(|| Failure::Config("the learned detector needs --checkpoint".into()))?,
        ),
        DetectorChoice::Manual => {
            let b = boxes
                .and_then(|m| m.get(video).copied())
                .or_else(|| truth.and_then(|t| t.get(&frame).map(|r| r.bbox)))
                .ok_or_else(|| Failure::Config(format!("{video}: no manual box and no ground truth")))?;
            DetectorKind::ManualAnnotation(b)
        }
    })
}

fn load_network(path: &Path) -> Result<Network> {
    Ok(load_checkpoint(path).map_err(config_err)?.network)
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut cfg: SyntheticConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SyntheticConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(config_err)?;
    let m = synth_generate(&cfg, &a.out)?;
    let per_split: Vec<String> = Split::ALL
        .iter()
        .map(|s| format!("{} {}", s, m.videos_in(*s).len()))
        .collect();
    println!(
        "{} videos x {} frames ({}x{}) written to {} [{}]",
        m.videos.len(),
        cfg.frames_per_video,
        cfg.width,
        cfg.height,
        a.out.display(),
        per_split.join(", ")
    );
    Ok(())
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let previous = a.manifest.as_deref().map(load_manifest).transpose()?;
    let root = a
        .frames
        .canonicalize()
        .map_err(|e| Failure::Config(format!("{}: {e}", a.frames.display())))?;
    let mut m = ingest_frames(&root, previous.as_ref()).map_err(config_err)?;
    for v in &mut m.videos {
        v.frame_dir = root.join(&v.frame_dir);
    }
    if previous.is_none() && m.videos.len() >= 3 {
        m = build_splits(&m, [0.6, 0.2, 0.2], a.seed).map_err(config_err)?;
    }
    std::fs::create_dir_all(&a.out)?;
    let path = a.out.join(MANIFEST_FILE);
    m.save(&path)?;
    println!("{} videos, {} frames -> {}", m.videos.len(), m.videos.iter().map(|v| v.frame_count as u64).sum::<u64>(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct DetectRecord<'a> {
    detector: &'a str,
    pad: Option<PaddingVariant>,
    window: [u32; 2],
    hough: HoughConfig,
    checkpoint: Option<&'a Path>,
    manual_boxes: Option<&'a Path>,
    manifest: &'a Path,
}

fn detect(a: &DetectArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let videos = open_videos(&manifest)?;
    let learned = match (&a.detector, &a.checkpoint) {
        (DetectorChoice::Learned, Some(p)) => Some(Arc::new(load_network(p)?)),
        _ => None,
    };
    let boxes = manual_boxes(a.boxes.as_deref())?;
    let label = format!("{:?}", a.detector).to_lowercase();
    let rows = videos
        .par_iter()
        .map(|v| -> Result<DetectionReport> {
            let id = v.video_id();
            let truth = ground_truth(&manifest, id)?;
            let det = detector_for(a.detector, a.pad, learned.as_ref(), boxes.as_ref(), truth.as_ref(), id, a.window.from)?;
            let frames = load_window(v, a.window)?;
            let gt_box = truth.as_ref().and_then(|t| t.get(&a.window.from)).map(|r| r.bbox);
            Ok(match time_detection(&frames, &det) {
                Ok((d, seconds)) => DetectionReport {
                    video_id: id.to_string(),
                    detector: det.label(),
                    bbox: Some(d.bbox),
                    frames_used: d.frames_used,
                    frames_discarded: d.frames_discarded,
                    seconds,
                    iou: gt_box.map(|g| iou(&d.bbox, &g)),
                    status: None,
                },
                Err(swp_core::Error::NoStemDetected { frames }) => DetectionReport {
                    video_id: id.to_string(),
                    detector: det.label(),
                    bbox: None,
                    frames_used: 0,
                    frames_discarded: frames,
                    seconds: 0.0,
                    iou: None,
                    status: Some("no_stem_detected".into()),
                },
                Err(e) => return Err(e.into()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let run = RunDir::create(&a.out, a.seed)?;
    run.record(
        "detect",
        a.seed,
        &DetectRecord {
            detector: &label,
            pad: a.pad.or(a.detector.pad()),
            window: [a.window.from, a.window.to],
            hough: HoughConfig::default(),
            checkpoint: a.checkpoint.as_deref(),
            manual_boxes: a.boxes.as_deref(),
            manifest: &a.manifest,
        },
    )?;
    let mut jsonl = String::new();
    for r in &rows {
        jsonl.push_str(&serde_json::to_string(r)?);
        jsonl.push('\n');
    }
    run.write("detections.jsonl", jsonl)?;
    let text = detection_table(&rows);
    run.write("detections.txt", &text)?;
    print!("{text}");
    println!("run directory: {}", run.path().display());
    if rows.iter().all(|r| r.bbox.is_none()) {
        bail!(Failure::NoDetection(format!("no stem detected in any of {} videos", rows.len())));
    }
    Ok(())
}

fn detection_table(rows: &[DetectionReport]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.video_id.clone(),
                r.detector.clone(),
                r.bbox
                    .map(|b| format!("{},{},{},{}", b.x_min, b.y_min, b.x_max, b.y_max))
                    .unwrap_or_else(|| "-".into()),
                r.frames_used.to_string(),
                fmt2_opt(r.iou.map(|v| 100.0 * v)),
                fmt2(r.seconds),
            ]
        })
        .collect();
    let mut out = table(&["video", "detector", "box", "frames", "iou%", "seconds"], &body);
    let ious: Vec<f64> = rows.iter().filter_map(|r| r.iou).collect();
    if !ious.is_empty() {
        out.push_str(&format!("mean IoU {}%\n", fmt2(100.0 * ious.iter().sum::<f64>() / ious.len() as f64)));
    }
    let detected: Vec<f64> = rows.iter().filter(|r| r.bbox.is_some()).map(|r| r.seconds).collect();
    if !detected.is_empty() {
        out.push_str(&format!(
            "mean seconds per video {}\n",
            fmt2(detected.iter().sum::<f64>() / detected.len() as f64)
        ));
    }
    out
}

/// Class-balanced crops from the manifest's split videos, boxed by the true circle.
fn manifest_corpus(args: &CorpusArgs, seed: u64) -> Result<(DatasetManifest, swp_core::cnn::DatasetSplits)> {
    let manifest = load_manifest(&args.manifest)?;
    let videos = open_videos(&manifest)?;
    let mut members = Vec::new();
    for v in &videos {
        let id = v.video_id();
        let Some(&split) = manifest.splits.get(id) else {
            continue;
        };
        let truth = ground_truth(&manifest, id)?
            .ok_or_else(|| Failure::Config(format!("{id}: {GROUND_TRUTH_FILE} is required for training")))?;
        let first = truth.values().next().ok_or_else(|| Failure::Config(format!("{id}: empty ground truth")))?;
        let (w, h) = v.dimensions();
        members.push(CorpusVideo {
            source: v,
            bbox: circle_to_box(&first.circle, args.pad, w, h)?,
            labels: truth.values().map(|r| (r.frame, r.class)).collect(),
            split,
        });
    }
    let data = build_corpus(&members, args.sizes, seed).map_err(config_err)?;
    Ok((manifest, data))
}

fn default_train_config() -> TrainConfig {
    TrainConfig {
        name: "F1-64".into(),
        epochs: 20,
        input_size: 64,
        ..TrainConfig::f1()
    }
}

#[derive(Serialize)]
struct TrainRecord<'a> {
    train: &'a TrainConfig,
    architecture: &'a ModelSpec,
    manifest: &'a Path,
    sizes: [usize; 3],
    pad: PaddingVariant,
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => read_json(p)?,
        None => default_train_config(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(config_err)?;
    if a.regressor {
        return regressor_cmd(a, &cfg);
    }
    let (_, data) = manifest_corpus(&a.corpus, cfg.seed)?;
    let spec = ModelSpec::reference_classifier(cfg.input_size as usize);
    let run = RunDir::create(&a.out, cfg.seed)?;
    run.record(
        "train",
        cfg.seed,
        &TrainRecord {
            train: &cfg,
            architecture: &spec,
            manifest: &a.corpus.manifest,
            sizes: a.corpus.sizes,
            pad: a.corpus.pad,
        },
    )?;
    let mut net = Network::new(&spec, cfg.seed)?;
    let out = train(&mut net, &data, &cfg, Some(run.path()))?;
    let h = &out.history;
    let rows: Vec<Vec<String>> = h
        .epochs
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                format!("{:.2e}", e.lr),
                fmt2(e.train_loss),
                fmt2(e.train_top1),
                fmt2(e.val_top1),
                fmt2(e.epoch_seconds),
            ]
        })
        .collect();
    let mut text = table(&["epoch", "lr", "loss", "train%", "val%", "seconds"], &rows);
    text.push_str(&format!(
        "best epoch {} val {}% test {}% | last test {}% | T_E {} s\n",
        h.best_epoch,
        fmt2(h.best_val_top1),
        fmt2(h.best_test_top1),
        fmt2(h.last_test_top1),
        fmt2(h.mean_epoch_seconds())
    ));
    run.write("summary.txt", &text)?;
    print!("{text}");
    println!("run directory: {}", run.path().display());
    Ok(())
}

#[derive(Serialize)]
struct GridRecord<'a> {
    variants: &'a [TrainConfig],
    architecture: &'a ModelSpec,
    manifest: &'a Path,
    sizes: [usize; 3],
    pad: PaddingVariant,
}

fn grid(a: &GridArgs) -> Result<()> {
    let mut variants: Vec<TrainConfig> = read_json(&a.grid)?;
    if variants.is_empty() {
        bail!(Failure::Config(format!("{}: no variants", a.grid.display())));
    }
    if let Some(s) = a.seed {
        for v in &mut variants {
            v.seed = s;
        }
    }
    for v in &variants {
        v.validate().map_err(config_err)?;
    }
    let seed = a.seed.unwrap_or(variants[0].seed);
    let (_, data) = manifest_corpus(&a.corpus, seed)?;
    let spec = ModelSpec::reference_classifier(variants[0].input_size as usize);
    let run = RunDir::create(&a.out, seed)?;
    run.record(
        "grid",
        seed,
        &GridRecord {
            variants: &variants,
            architecture: &spec,
            manifest: &a.corpus.manifest,
            sizes: a.corpus.sizes,
            pad: a.corpus.pad,
        },
    )?;
    let report = grid_run(&spec, &variants, &data)?;
    run.write_json("grid.json", &report)?;
    let rows: Vec<Vec<String>> = report
        .runs
        .iter()
        .map(|r| {
            vec![
                r.config.name.clone(),
                fmt2_opt(r.best_test_top1),
                r.history.as_ref().map_or_else(|| "-".into(), |h| h.best_epoch.to_string()),
                r.numerical_error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let mut text = table(&["variant", "test%", "best epoch", "error"], &rows);
    text.push_str(&format!(
        "P2_BA {} P2_AVG {} ({} completed, {} failed)\n",
        fmt2_opt(report.summary.p2_ba),
        fmt2_opt(report.summary.p2_avg),
        report.summary.completed,
        report.summary.failed
    ));
    run.write("summary.txt", &text)?;
    print!("{text}");
    println!("run directory: {}", run.path().display());
    if report.summary.completed == 0 {
        bail!(Failure::Numerical("every grid variant failed numerically".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct GateRecord<'a> {
    thresholds: GateThresholds,
    exceptions: &'a [String],
    inputs: &'a [GateInput],
}

fn gate(a: &GateArgs) -> Result<()> {
    let inputs = match &a.input {
        Some(p) => read_json(p)?,
        None => phase1_reference_rows(),
    };
    let exceptions = match (&a.exceptions, &a.input) {
        (Some(e), _) => e.clone(),
        (None, None) => phase1_reference_exceptions(),
        (None, Some(_)) => Vec::new(),
    };
    let thresholds = GateThresholds {
        min_top1: a.min_top1,
        max_epoch_seconds: a.max_epoch_seconds,
        min_best_epoch: a.min_best_epoch,
    };
    let decisions = phase1_gate(&inputs, &thresholds, &exceptions).map_err(config_err)?;
    let rows: Vec<Vec<String>> = inputs
        .iter()
        .zip(&decisions)
        .map(|(i, d)| {
            let notes: Vec<String> = d
                .reasons
                .iter()
                .filter_map(|r| match r {
                    GateReason::Criterion { name, passed: false, .. } => Some(format!("fails {name}")),
                    GateReason::FamilyDedup { kept } => Some(format!("family kept {kept}")),
                    GateReason::Exception => Some("exception".into()),
                    _ => None,
                })
                .collect();
            vec![
                i.model_name.clone(),
                i.family.clone(),
                fmt2(i.t_e),
                fmt2(i.p1_ba),
                i.b_e.map_or_else(|| "-".into(), |b| b.to_string()),
                if d.selected { "yes" } else { "no" }.into(),
                notes.join("; "),
            ]
        })
        .collect();
    let selected: Vec<&str> = decisions
        .iter()
        .filter(|d| d.selected)
        .map(|d| d.model_name.as_str())
        .collect();
    let mut text = table(&["model", "family", "T_E", "P1_BA", "B_E", "selected", "notes"], &rows);
    text.push_str(&format!("{} selected: {}\n", selected.len(), selected.join(", ")));
    print!("{text}");
    if let Some(out) = &a.out {
        let run = RunDir::create(out, 0)?;
        run.record(
            "gate",
            0,
            &GateRecord {
                thresholds,
                exceptions: &exceptions,
                inputs: &inputs,
            },
        )?;
        run.write_json("gate.json", &decisions)?;
        run.write("gate.txt", &text)?;
        println!("run directory: {}", run.path().display());
    }
    Ok(())
}

/// Reference labels from the majority of three annotators; conflicts map to `None`.
fn annotation_truth(store: &AnnotationStore, video: &str) -> Result<FrameTruth> {
    let labels = store.labels(video)?;
    let report = agreement_report(&labels).map_err(config_err)?;
    Ok(report
        .frames
        .iter()
        .map(|f| {
            let label = match f.majority {
                Majority::Conflict => None,
                m => m.label(),
            };
            (f.frame, label)
        })
        .collect())
}

#[derive(Serialize)]
struct E2eRecord<'a> {
    e2e: E2EConfig,
    detector: String,
    pad: Option<PaddingVariant>,
    hough: HoughConfig,
    classifier: &'a str,
    checkpoint: Option<&'a Path>,
    annotations: Option<&'a Path>,
    split: Option<&'a str>,
    manifest: &'a Path,
}

fn e2e(a: &E2eArgs) -> Result<()> {
    let cfg = E2EConfig {
        detect_from: a.window.from,
        detect_to: a.window.to,
        classify_from: a.classify_from,
        classify_to: a.classify_to,
    };
    cfg.validate().map_err(config_err)?;
    let manifest = load_manifest(&a.manifest)?;
    let split: Option<Split> = match &a.split {
        Some(s) => Some(
            Split::ALL
                .into_iter()
                .find(|x| x.to_string() == *s)
                .ok_or_else(|| Failure::Config(format!("unknown split {s:?}")))?,
        ),
        None => None,
    };
    let videos: Vec<DiskVideo> = open_videos(&manifest)?
        .into_iter()
        .filter(|v| split.is_none_or(|s| manifest.splits.get(v.video_id()) == Some(&s)))
        .collect();
    if videos.is_empty() {
        bail!(Failure::Config("no videos to evaluate".into()));
    }
    let cnn = match (&a.checkpoint, a.oracle) {
        (Some(p), false) => Some(Classifier::Cnn(load_network(p)?)),
        (None, true) => None,
        _ => bail!(Failure::Config("pass exactly one of --checkpoint or --oracle".into())),
    };
    let learned = match (&a.detector, &a.detector_checkpoint) {
        (DetectorChoice::Learned, Some(p)) => Some(Arc::new(load_network(p)?)),
        _ => None,
    };
    let boxes = manual_boxes(a.boxes.as_deref())?;
    let store = a.annotations.as_ref().map(AnnotationStore::new);
    let mut truths = Vec::with_capacity(videos.len());
    let mut detectors = Vec::with_capacity(videos.len());
    let mut oracles = Vec::new();
    for v in &videos {
        let id = v.video_id();
        let gt = ground_truth(&manifest, id)?;
        let truth: FrameTruth = match &store {
            Some(s) => annotation_truth(s, id)?,
            None => gt
                .as_ref()
                .map(|t| t.values().map(|r| (r.frame, Some(r.class))).collect())
                .unwrap_or_default(),
        };
        detectors.push(detector_for(a.detector, a.pad, learned.as_ref(), boxes.as_ref(), gt.as_ref(), id, a.window.from)?);
        if cnn.is_none() {
            oracles.push(Classifier::Oracle(
                truth.iter().filter_map(|(&f, c)| c.map(|c| (f, c))).collect(),
            ));
        }
        truths.push(truth);
    }
    let suite: Vec<SuiteVideo> = videos
        .iter()
        .enumerate()
        .map(|(i, v)| SuiteVideo {
            source: v,
            truth: &truths[i],
            detector: &detectors[i],
            classifier: cnn.as_ref().unwrap_or_else(|| &oracles[i]),
        })
        .collect();
    let report = e2e_suite(&suite, &cfg).map_err(|e| match e {
        swp_core::Error::MissingGroundTruth(_) => config_err(e),
        e => e.into(),
    })?;
    let run = RunDir::create(&a.out, a.seed)?;
    run.record(
        "e2e",
        a.seed,
        &E2eRecord {
            e2e: cfg,
            detector: format!("{:?}", a.detector).to_lowercase(),
            pad: a.pad.or(a.detector.pad()),
            hough: HoughConfig::default(),
            classifier: if a.oracle { "oracle" } else { "cnn" },
            checkpoint: a.checkpoint.as_deref(),
            annotations: a.annotations.as_deref(),
            split: a.split.as_deref(),
            manifest: &a.manifest,
        },
    )?;
    run.write_json("e2e.json", &report)?;
    let summary = suite_boxplot(&report);
    run.write_json("boxplot.json", &summary)?;
    let mut text = e2e_table(&report);
    text.push_str(&boxplot_text(&summary));
    run.write("e2e.txt", &text)?;
    print!("{text}");
    println!("run directory: {}", run.path().display());
    if report.no_detection == report.videos.len() {
        bail!(Failure::NoDetection(format!("no stem detected in any of {} videos", report.videos.len())));
    }
    Ok(())
}

fn e2e_table(r: &SuiteReport) -> String {
    let rows: Vec<Vec<String>> = r
        .videos
        .iter()
        .map(|v| {
            vec![
                v.video_id.clone(),
                match v.status {
                    VideoStatus::Ok => "ok".into(),
                    VideoStatus::NoStemDetected => "no stem".into(),
                },
                v.bbox
                    .map(|b| format!("{},{},{},{}", b.x_min, b.y_min, b.x_max, b.y_max))
                    .unwrap_or_else(|| "-".into()),
                v.frames_classified.to_string(),
                v.frames_skipped.to_string(),
                fmt2_opt(v.top1),
            ]
        })
        .collect();
    let mut out = table(&["video", "status", "box", "classified", "skipped", "top1%"], &rows);
    match &r.pooled {
        Some(m) => out.push_str(&format!(
            "pooled Top-1 {} precision {} recall {} F1 {}\n",
            fmt2(m.top1),
            fmt2(m.weighted_precision),
            fmt2(m.weighted_recall),
            fmt2(m.weighted_f1)
        )),
        None => out.push_str("pooled Top-1 -\n"),
    }
    out.push_str(&format!(
        "per-video mean Top-1 {} | no detection {}\n",
        fmt2_opt(r.per_video_mean_top1),
        r.no_detection
    ));
    out
}

fn suite_boxplot(r: &SuiteReport) -> BoxplotSummary {
    let values: Vec<Option<f64>> = r
        .videos
        .iter()
        .map(|v| match v.status {
            VideoStatus::Ok => v.top1,
            VideoStatus::NoStemDetected => None,
        })
        .collect();
    boxplot(&values)
}

fn boxplot_text(s: &BoxplotSummary) -> String {
    match &s.stats {
        Some(b) => format!(
            "boxplot n {} min {} q1 {} median {} q3 {} max {} outliers [{}] no detection {}\n",
            b.n,
            fmt2(b.min),
            fmt2(b.q1),
            fmt2(b.median),
            fmt2(b.q3),
            fmt2(b.max),
            b.outliers.iter().map(|&v| fmt2(v)).collect::<Vec<_>>().join(", "),
            s.no_detection
        ),
        None => format!("boxplot empty, no detection {}\n", s.no_detection),
    }
}

fn boxplot_cmd(a: &BoxplotArgs) -> Result<()> {
    let report: SuiteReport = read_json(&a.report)?;
    if report.videos.is_empty() {
        bail!(Failure::Config(format!("{}: no videos", a.report.display())));
    }
    let summary = suite_boxplot(&report);
    let text = boxplot_text(&summary);
    print!("{text}");
    if let Some(out) = &a.out {
        let run = RunDir::create(out, 0)?;
        run.record("boxplot", 0, &BoxplotRecord { report: &a.report })?;
        run.write_json("boxplot.json", &summary)?;
        run.write("boxplot.txt", &text)?;
        println!("run directory: {}", run.path().display());
    }
    Ok(())
}

#[derive(Serialize)]
struct BoxplotRecord<'a> {
    report: &'a Path,
}

fn regressor_cmd(a: &TrainArgs, cfg: &TrainConfig) -> Result<()> {
    let manifest = load_manifest(&a.corpus.manifest)?;
    let videos = open_videos(&manifest)?;
    let mut pool = Vec::new();
    let mut boxes = HashMap::new();
    for v in &videos {
        let id = v.video_id();
        if manifest.splits.get(id) != Some(&Split::Train) {
            continue;
        }
        let Some(truth) = ground_truth(&manifest, id)? else {
            continue;
        };
        for r in truth.values() {
            pool.push((FrameRef::new(id, r.frame), r.class));
            boxes.insert((id.to_string(), r.frame), r.bbox);
        }
    }
    let picked = balanced_sample(&pool, a.corpus.sizes[0], cfg.seed).map_err(config_err)?;
    let by_id: HashMap<&str, &DiskVideo> = videos.iter().map(|v| (v.video_id(), v)).collect();
    let samples = picked
        .iter()
        .map(|(r, _)| Ok((by_id[r.video_id.as_str()].frame(r.frame)?, boxes[&(r.video_id.clone(), r.frame)])))
        .collect::<Result<Vec<(Image, BoundingBox)>>>()?;
    let spec = ModelSpec::box_regressor(cfg.input_size as usize);
    let run = RunDir::create(&a.out, cfg.seed)?;
    run.record(
        "train",
        cfg.seed,
        &TrainRecord {
            train: cfg,
            architecture: &spec,
            manifest: &a.corpus.manifest,
            sizes: a.corpus.sizes,
            pad: a.corpus.pad,
        },
    )?;
    let mut net = Network::new(&spec, cfg.seed)?;
    let losses = train_regressor(&mut net, &samples, cfg)?;
    save_checkpoint(&net, Some(cfg), None, &run.file("regressor.json"))?;
    let rows: Vec<Vec<String>> = losses
        .iter()
        .enumerate()
        .map(|(i, l)| vec![(i + 1).to_string(), format!("{l:.6}")])
        .collect();
    let text = table(&["epoch", "mse"], &rows);
    run.write("summary.txt", &text)?;
    print!("{text}");
    println!("run directory: {}", run.path().display());
    Ok(())
}
