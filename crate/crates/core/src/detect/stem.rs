use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{aggregate_mode, circle_to_box, detect_circles, filter_single, HoughConfig, PaddingVariant};
use crate::cnn::{regress_box, Network};
use crate::error::{Error, Result};
use crate::imaging::{BoundingBox, Circle, Image};

#[derive(Debug, Clone)]
pub enum DetectorKind {
    Hough(HoughConfig, PaddingVariant),
    /// Box regressor applied per frame; frame boxes fused by coordinate-wise median.
    LearnedRegressor(Arc<Network>),
    /// A box supplied by an annotator.
    ManualAnnotation(BoundingBox),
}

impl DetectorKind {
    pub fn hough(pad: PaddingVariant) -> Self {
        DetectorKind::Hough(HoughConfig::default(), pad)
    }

    /// Report label: "H20", "H30", "H40", "learned" or "manual".
    pub fn label(&self) -> String {
        match self {
            DetectorKind::Hough(_, pad) => pad.to_string(),
            DetectorKind::LearnedRegressor(_) => "learned".into(),
            DetectorKind::ManualAnnotation(_) => "manual".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemDetection {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    /// Aggregated circle, for the Hough detector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle: Option<Circle>,
    pub frames_used: usize,
    pub frames_discarded: usize,
}

fn median(mut v: Vec<i32>) -> i32 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]).div_euclid(2)
    }
}

/// Locates the stem over a window of frames.
pub fn detect_stem(frames: &[Image], detector: &DetectorKind) -> Result<StemDetection> {
    let Some(first) = frames.first() else {
        return Err(Error::Empty("frame window"));
    };
    let (w, h) = (first.width(), first.height());
    match detector {
        DetectorKind::ManualAnnotation(b) => Ok(StemDetection {
            bbox: *b,
            circle: None,
            frames_used: frames.len(),
            frames_discarded: 0,
        }),
        DetectorKind::Hough(cfg, pad) => {
            let mut singles = Vec::with_capacity(frames.len());
            for f in frames {
                if let Some(c) = filter_single(&detect_circles(f, cfg)?) {
                    singles.push(c);
                }
            }
            if singles.is_empty() {
                return Err(Error::NoStemDetected { frames: frames.len() });
            }
            let circle = aggregate_mode(&singles)?;
            Ok(StemDetection {
                bbox: circle_to_box(&circle, *pad, w, h)?,
                circle: Some(circle),
                frames_used: singles.len(),
                frames_discarded: frames.len() - singles.len(),
            })
        }
        DetectorKind::LearnedRegressor(net) => {
            let mut boxes = Vec::with_capacity(frames.len());
            for f in frames {
                match regress_box(net, f) {
                    Ok(b) => boxes.push(b),
                    Err(Error::InvalidBox(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            if boxes.is_empty() {
                return Err(Error::NoStemDetected { frames: frames.len() });
            }
            let pick = |f: fn(&BoundingBox) -> i32| median(boxes.iter().map(f).collect());
            let fused = BoundingBox::new(
                pick(|b| b.x_min),
                pick(|b| b.y_min),
                pick(|b| b.x_max),
                pick(|b| b.y_max),
            )?;
            Ok(StemDetection {
                bbox: fused.clamp_to(w, h)?,
                circle: None,
                frames_used: boxes.len(),
                frames_discarded: frames.len() - boxes.len(),
            })
        }
    }
}

/// Runs [`detect_stem`] and returns its result with the wall-clock seconds,
/// rounded to milliseconds.
pub fn time_detection(frames: &[Image], detector: &DetectorKind) -> Result<(StemDetection, f64)> {
    let start = Instant::now();
    let det = detect_stem(frames, detector)?;
    let seconds = (start.elapsed().as_secs_f64() * 1000.0).round() / 1000.0;
    Ok((det, seconds))
}

/// One line of a detection report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub video_id: String,
    pub detector: String,
    #[serde(rename = "box")]
    pub bbox: Option<BoundingBox>,
    pub frames_used: usize,
    pub frames_discarded: usize,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}
