//! Stem localization over a window of frames.

mod aggregate;
mod hough;
mod stem;

pub use aggregate::{
    aggregate_mode, circle_to_box, detection_histogram, filter_single, padded_square, PaddingVariant,
};
pub use hough::{detect_circles, hysteresis, CircleDetection, HoughConfig};
pub use stem::{detect_stem, time_detection, DetectionReport, DetectorKind, StemDetection};
