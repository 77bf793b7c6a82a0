use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CircleDetection;
use crate::error::{Error, Result};
use crate::imaging::{BoundingBox, Circle};

/// Pixels added to the detected radius before boxing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaddingVariant {
    pub pad: u32,
}

impl PaddingVariant {
    pub const H20: Self = Self { pad: 20 };
    pub const H30: Self = Self { pad: 30 };
    pub const H40: Self = Self { pad: 40 };
    pub const NONE: Self = Self { pad: 0 };

    pub fn new(pad: u32) -> Self {
        Self { pad }
    }
}

impl fmt::Display for PaddingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H{}", self.pad)
    }
}

impl FromStr for PaddingVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.strip_prefix(['H', 'h']).unwrap_or(s);
        digits
            .parse()
            .map(Self::new)
            .map_err(|_| Error::Config(format!("invalid padding {s:?}")))
    }
}

/// The only circle of a frame, or nothing when the frame has zero or several.
pub fn filter_single(dets: &[CircleDetection]) -> Option<Circle> {
    match dets {
        [one] => Some(one.circle),
        _ => None,
    }
}

/// Occurrence counts of each (cx, cy, r) triple.
pub fn detection_histogram(circles: &[Circle]) -> BTreeMap<Circle, usize> {
    let mut counts = BTreeMap::new();
    for c in circles {
        *counts.entry(*c).or_insert(0) += 1;
    }
    counts
}

/// Most frequent circle; ties go to the smallest (cx, cy, r).
pub fn aggregate_mode(circles: &[Circle]) -> Result<Circle> {
    let counts = detection_histogram(circles);
    let mut best: Option<(Circle, usize)> = None;
    for (c, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((c, n));
        }
    }
    best.map(|(c, _)| c).ok_or(Error::NoDetections)
}

/// Unclamped square of half-side `r + pad` around the circle center.
pub fn padded_square(c: &Circle, pad: PaddingVariant) -> BoundingBox {
    let half = c.r + pad.pad as i32;
    BoundingBox {
        x_min: c.cx - half,
        y_min: c.cy - half,
        x_max: c.cx + half,
        y_max: c.cy + half,
    }
}

pub fn circle_to_box(c: &Circle, pad: PaddingVariant, frame_w: u32, frame_h: u32) -> Result<BoundingBox> {
    padded_square(c, pad).clamp_to(frame_w, frame_h)
}
