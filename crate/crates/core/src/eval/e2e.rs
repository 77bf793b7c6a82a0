use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{metrics, ConfusionMatrix, MetricsReport};
use crate::cnn::{Classifier, WetnessClass};
use crate::dataset::FrameSource;
use crate::detect::{time_detection, DetectorKind};
use crate::error::{Error, Result};
use crate::imaging::{BoundingBox, Circle, Image};

/// Frame ranges of an end-to-end run. All indices are 1-based and inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct E2EConfig {
    pub detect_from: u32,
    pub detect_to: u32,
    pub classify_from: u32,
    /// Last classified frame; the end of the video when absent.
    pub classify_to: Option<u32>,
}

impl Default for E2EConfig {
    fn default() -> Self {
        Self {
            detect_from: 501,
            detect_to: 700,
            classify_from: 701,
            classify_to: None,
        }
    }
}

impl E2EConfig {
    pub fn validate(&self) -> Result<()> {
        if self.detect_from == 0 || self.detect_from > self.detect_to {
            return Err(Error::Config(format!(
                "detection window {}:{} is empty or not 1-based",
                self.detect_from, self.detect_to
            )));
        }
        if self.classify_from <= self.detect_to {
            return Err(Error::Config(format!(
                "classification starts at frame {} inside the detection window ending at {}",
                self.classify_from, self.detect_to
            )));
        }
        if let Some(end) = self.classify_to {
            if end < self.classify_from {
                return Err(Error::Config(format!(
                    "classification range {}:{end} is empty",
                    self.classify_from
                )));
            }
        }
        Ok(())
    }

    fn classify_end(&self, frame_count: u32) -> u32 {
        self.classify_to.map_or(frame_count, |e| e.min(frame_count))
    }
}

/// Per-frame reference labels; `None` marks a frame without consensus.
pub type FrameTruth = BTreeMap<u32, Option<WetnessClass>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VideoStatus {
    Ok,
    NoStemDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoResult {
    pub video_id: String,
    pub status: VideoStatus,
    pub detector: String,
    pub classifier: String,
    #[serde(rename = "box")]
    pub bbox: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle: Option<Circle>,
    pub detection_seconds: f64,
    pub frames_classified: usize,
    /// Frames in range whose reference label is a conflict.
    pub frames_skipped: usize,
    pub confusion: ConfusionMatrix,
    /// Top-1 (%) on this video, absent when nothing was classified.
    pub top1: Option<f64>,
}

/// Detects the stem on the detection window, then classifies every later frame
/// inside the returned box.
pub fn e2e_evaluate(
    source: &dyn FrameSource,
    truth: &FrameTruth,
    detector: &DetectorKind,
    classifier: &Classifier,
    cfg: &E2EConfig,
) -> Result<VideoResult> {
    cfg.validate()?;
    let count = source.frame_count();
    if count < cfg.classify_from {
        return Err(Error::Config(format!(
            "{}: {count} frames, classification starts at {}",
            source.video_id(),
            cfg.classify_from
        )));
    }
    let end = cfg.classify_end(count);
    let missing: Vec<u32> = (cfg.classify_from..=end).filter(|f| !truth.contains_key(f)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingGroundTruth(missing));
    }
    let window: Vec<Image> = (cfg.detect_from..=cfg.detect_to)
        .map(|i| source.frame(i))
        .collect::<Result<_>>()?;
    let mut result = VideoResult {
        video_id: source.video_id().to_string(),
        status: VideoStatus::Ok,
        detector: detector.label(),
        classifier: classifier.name().to_string(),
        bbox: None,
        circle: None,
        detection_seconds: 0.0,
        frames_classified: 0,
        frames_skipped: 0,
        confusion: ConfusionMatrix::default(),
        top1: None,
    };
    let (det, seconds) = match time_detection(&window, detector) {
        Ok(d) => d,
        Err(Error::NoStemDetected { .. }) => {
            result.status = VideoStatus::NoStemDetected;
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    drop(window);
    result.bbox = Some(det.bbox);
    result.circle = det.circle;
    result.detection_seconds = seconds;
    for f in cfg.classify_from..=end {
        let Some(label) = truth[&f] else {
            result.frames_skipped += 1;
            continue;
        };
        let frame = source.frame(f)?;
        let predicted = classifier.classify(f, &frame, &det.bbox)?;
        result.confusion.add(label, predicted);
        result.frames_classified += 1;
    }
    if result.frames_classified > 0 {
        result.top1 = Some(metrics(&result.confusion)?.top1);
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub videos: Vec<VideoResult>,
    /// Metrics of the confusion matrix summed over videos.
    pub pooled: Option<MetricsReport>,
    /// Unweighted mean of per-video Top-1 over videos with a detection.
    pub per_video_mean_top1: Option<f64>,
    pub no_detection: usize,
}

/// One video of a suite with its detector and classifier.
pub struct SuiteVideo<'a> {
    pub source: &'a dyn FrameSource,
    pub truth: &'a FrameTruth,
    pub detector: &'a DetectorKind,
    pub classifier: &'a Classifier,
}

/// Runs [`e2e_evaluate`] on every video in parallel, preserving input order.
pub fn e2e_suite(videos: &[SuiteVideo<'_>], cfg: &E2EConfig) -> Result<SuiteReport> {
    if videos.is_empty() {
        return Err(Error::Empty("video list"));
    }
    let results = videos
        .par_iter()
        .map(|v| e2e_evaluate(v.source, v.truth, v.detector, v.classifier, cfg))
        .collect::<Result<Vec<_>>>()?;
    summarize_suite(results)
}

pub fn summarize_suite(videos: Vec<VideoResult>) -> Result<SuiteReport> {
    let mut pooled = ConfusionMatrix::default();
    for v in &videos {
        pooled.merge(&v.confusion);
    }
    let tops: Vec<f64> = videos.iter().filter_map(|v| v.top1).collect();
    Ok(SuiteReport {
        pooled: if pooled.total() > 0 { Some(metrics(&pooled)?) } else { None },
        per_video_mean_top1: (!tops.is_empty()).then(|| tops.iter().sum::<f64>() / tops.len() as f64),
        no_detection: videos.iter().filter(|v| v.status == VideoStatus::NoStemDetected).count(),
        videos,
    })
}

/// Wraps a frame source and records every index requested from it.
pub struct RecordingSource<'a> {
    inner: &'a dyn FrameSource,
    accessed: Mutex<Vec<u32>>,
}

impl<'a> RecordingSource<'a> {
    pub fn new(inner: &'a dyn FrameSource) -> Self {
        Self {
            inner,
            accessed: Mutex::new(Vec::new()),
        }
    }

    /// Requested indices in request order.
    pub fn accessed(&self) -> Vec<u32> {
        self.accessed.lock().expect("access log").clone()
    }
}

impl FrameSource for RecordingSource<'_> {
    fn video_id(&self) -> &str {
        self.inner.video_id()
    }

    fn frame_count(&self) -> u32 {
        self.inner.frame_count()
    }

    fn dimensions(&self) -> (u32, u32) {
        self.inner.dimensions()
    }

    fn frame(&self, index: u32) -> Result<Image> {
        self.accessed.lock().expect("access log").push(index);
        self.inner.frame(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    struct Blank {
        frames: u32,
    }

    impl FrameSource for Blank {
        fn video_id(&self) -> &str {
            "blank"
        }
        fn frame_count(&self) -> u32 {
            self.frames
        }
        fn dimensions(&self) -> (u32, u32) {
            (64, 48)
        }
        fn frame(&self, index: u32) -> Result<Image> {
            if index == 0 || index > self.frames {
                return Err(Error::Dataset(format!("no frame {index}")));
            }
            Ok(Image::filled(64, 48, 100))
        }
    }

    fn small() -> E2EConfig {
        E2EConfig {
            detect_from: 2,
            detect_to: 4,
            classify_from: 6,
            classify_to: None,
        }
    }

    #[test]
    fn config_rejects_overlap_and_empty_windows() {
        E2EConfig::default().validate().unwrap();
        let mut c = small();
        c.classify_from = 4;
        assert!(c.validate().is_err());
        c = small();
        c.detect_from = 0;
        assert!(c.validate().is_err());
        c = small();
        c.classify_to = Some(5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn manual_box_with_oracle_and_conflicts() {
        let src = Blank { frames: 10 };
        let rec = RecordingSource::new(&src);
        let mut truth = FrameTruth::new();
        let mut oracle = HashMap::new();
        for f in 6..=10 {
            let c = WetnessClass::ALL[f as usize % 3];
            truth.insert(f, (f != 8).then_some(c));
            oracle.insert(f, c);
        }
        let bbox = BoundingBox::new(10, 10, 30, 30).unwrap();
        let r = e2e_evaluate(
            &rec,
            &truth,
            &DetectorKind::ManualAnnotation(bbox),
            &Classifier::Oracle(oracle),
            &small(),
        )
        .unwrap();
        assert_eq!(r.status, VideoStatus::Ok);
        assert_eq!(r.bbox, Some(bbox));
        assert_eq!((r.frames_classified, r.frames_skipped), (4, 1));
        assert_eq!(r.top1, Some(100.0));
        assert_eq!(rec.accessed(), vec![2, 3, 4, 6, 7, 9, 10]);
    }

    #[test]
    fn missing_truth_is_reported() {
        let src = Blank { frames: 8 };
        let truth: FrameTruth = [(6, Some(WetnessClass::Dry))].into_iter().collect();
        let err = e2e_evaluate(
            &src,
            &truth,
            &DetectorKind::ManualAnnotation(BoundingBox::new(0, 0, 8, 8).unwrap()),
            &Classifier::Oracle(HashMap::new()),
            &small(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingGroundTruth(ref v) if v == &[7, 8]));
    }

    #[test]
    fn blank_video_has_no_detection() {
        let src = Blank { frames: 8 };
        let truth: FrameTruth = (6..=8).map(|f| (f, Some(WetnessClass::Dry))).collect();
        let mut hough = crate::detect::HoughConfig::default();
        hough.r_min = 5;
        hough.r_max = 15;
        let det = DetectorKind::Hough(hough, crate::detect::PaddingVariant::H30);
        let oracle = Classifier::Oracle(HashMap::new());
        let video = SuiteVideo {
            source: &src,
            truth: &truth,
            detector: &det,
            classifier: &oracle,
        };
        let report = e2e_suite(&[video], &small()).unwrap();
        assert_eq!(report.no_detection, 1);
        assert_eq!(report.videos[0].status, VideoStatus::NoStemDetected);
        assert!(report.pooled.is_none());
        assert!(report.per_video_mean_top1.is_none());
    }
}
