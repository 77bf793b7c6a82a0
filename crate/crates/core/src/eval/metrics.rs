use serde::{Deserialize, Serialize};

use crate::cnn::WetnessClass;
use crate::error::{Error, Result};
use crate::imaging::BoundingBox;

/// Intersection over union of half-open pixel boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Rows are true classes, columns predicted classes, in class-code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: WetnessClass, predicted: WetnessClass) {
        self.counts[truth.code()][predicted.code()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for i in 0..3 {
            for j in 0..3 {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }
}

pub fn confusion(preds: &[WetnessClass], labels: &[WetnessClass]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: labels.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(labels) {
        cm.add(t, p);
    }
    Ok(cm)
}

/// All values are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub top1: f64,
    pub precision: [f64; 3],
    pub recall: [f64; 3],
    pub f1: [f64; 3],
    pub support: [u64; 3],
    /// Averages weighted by true-class support.
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Set when some precision or recall had a zero denominator and was taken as 0.
    pub zero_denominator: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    #[default]
    Weighted,
    Macro,
}

impl MetricsReport {
    /// (precision, recall, f1) under the chosen averaging.
    pub fn averaged(&self, mode: Averaging) -> (f64, f64, f64) {
        match mode {
            Averaging::Weighted => (self.weighted_precision, self.weighted_recall, self.weighted_f1),
            Averaging::Macro => (self.macro_precision, self.macro_recall, self.macro_f1),
        }
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    let c = &cm.counts;
    let mut zero_denominator = false;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            zero_denominator = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let support: [u64; 3] = [0, 1, 2].map(|i| c[i].iter().sum());
    let predicted: [u64; 3] = [0, 1, 2].map(|j| (0..3).map(|i| c[i][j]).sum());
    let precision = [0, 1, 2].map(|i| ratio(c[i][i], predicted[i]));
    let recall = [0, 1, 2].map(|i| ratio(c[i][i], support[i]));
    let f1 = [0, 1, 2].map(|i| {
        let (p, r) = (precision[i], recall[i]);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    });
    let weighted = |v: &[f64; 3]| {
        100.0 * (0..3).map(|i| v[i] * support[i] as f64).sum::<f64>() / total as f64
    };
    let mean = |v: &[f64; 3]| 100.0 * v.iter().sum::<f64>() / 3.0;
    Ok(MetricsReport {
        top1: 100.0 * cm.trace() as f64 / total as f64,
        precision: precision.map(|v| 100.0 * v),
        recall: recall.map(|v| 100.0 * v),
        f1: f1.map(|v| 100.0 * v),
        support,
        weighted_precision: weighted(&precision),
        weighted_recall: weighted(&recall),
        weighted_f1: weighted(&f1),
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1),
        zero_denominator,
    })
}
