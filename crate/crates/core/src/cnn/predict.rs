use std::collections::HashMap;

use super::augment::to_input;
use super::{softmax, Network, Tensor, WetnessClass};
use crate::error::{Error, Result};
use crate::imaging::{crop, BoundingBox, Image};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: WetnessClass,
    pub probabilities: [f32; 3],
}

fn input_tensor(model: &Network, img: &Image) -> Result<Tensor> {
    let size = model.input_size();
    Tensor::new(vec![1, 1, size, size], to_input(img, size as u32))
}

/// Crops `bbox` out of `frame` and classifies the crop.
pub fn predict(model: &Network, frame: &Image, bbox: &BoundingBox) -> Result<Prediction> {
    let patch = crop(frame, bbox)?;
    let probs = softmax(&model.forward(&input_tensor(model, &patch)?)?);
    let p = [probs.data()[0], probs.data()[1], probs.data()[2]];
    Ok(Prediction {
        class: WetnessClass::argmax(&p),
        probabilities: p,
    })
}

/// Runs a 4-output regressor on a whole frame and maps its output back to pixels.
pub fn regress_box(model: &Network, frame: &Image) -> Result<BoundingBox> {
    let out = model.forward(&input_tensor(model, frame)?)?;
    let v: Vec<f64> = out.data().iter().map(|&x| (x as f64).clamp(0.0, 1.0)).collect();
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    let (x0, x1) = (v[0].min(v[2]) * w, v[0].max(v[2]) * w);
    let (y0, y1) = (v[1].min(v[3]) * h, v[1].max(v[3]) * h);
    let b = BoundingBox {
        x_min: x0.round() as i32,
        y_min: y0.round() as i32,
        x_max: x1.round() as i32,
        y_max: y1.round() as i32,
    };
    if b.x_max <= b.x_min || b.y_max <= b.y_min {
        return Err(Error::InvalidBox(b));
    }
    Ok(b)
}

/// Per-frame class source used by the evaluation pipeline.
pub enum Classifier {
    Cnn(Network),
    /// Precomputed probabilities keyed by frame index.
    External(HashMap<u32, [f32; 3]>),
    /// Ground-truth labels keyed by frame index.
    Oracle(HashMap<u32, WetnessClass>),
}

impl Classifier {
    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Cnn(_) => "cnn",
            Classifier::External(_) => "external",
            Classifier::Oracle(_) => "oracle",
        }
    }

    pub fn classify(&self, frame_index: u32, frame: &Image, bbox: &BoundingBox) -> Result<WetnessClass> {
        match self {
            Classifier::Cnn(net) => Ok(predict(net, frame, bbox)?.class),
            Classifier::External(map) => map
                .get(&frame_index)
                .map(|p| WetnessClass::argmax(p))
                .ok_or_else(|| Error::Dataset(format!("no external prediction for frame {frame_index}"))),
            Classifier::Oracle(map) => map
                .get(&frame_index)
                .copied()
                .ok_or_else(|| Error::Dataset(format!("no ground truth for frame {frame_index}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::ModelSpec;

    #[test]
    fn probabilities_sum_to_one() {
        let net = Network::new(&ModelSpec::reference_classifier(32), 1).unwrap();
        let frame = Image::from_fn(80, 60, |x, y| ((x * 3 + y) % 256) as u8);
        let p = predict(&net, &frame, &BoundingBox::new(10, 10, 50, 50).unwrap()).unwrap();
        let s: f32 = p.probabilities.iter().sum();
        assert!((s - 1.0).abs() < 1e-5);
        assert_eq!(p.class, WetnessClass::argmax(&p.probabilities));
    }

    #[test]
    fn box_outside_frame_is_an_error() {
        let net = Network::new(&ModelSpec::reference_classifier(16), 1).unwrap();
        let frame = Image::filled(20, 20, 0);
        let b = BoundingBox::new(30, 30, 40, 40).unwrap();
        assert!(predict(&net, &frame, &b).is_err());
    }
}
