use super::{Network, Tensor};
use crate::error::{Error, Result};

/// Row-wise softmax, computed in f64 and max-shifted.
pub fn softmax(logits: &Tensor) -> Tensor {
    let k = logits.shape().get(1).copied().unwrap_or(1);
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(k) {
        let m = row.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b)) as f64;
        let exps: Vec<f64> = row.iter().map(|&v| (v as f64 - m).exp()).collect();
        let z: f64 = exps.iter().sum();
        out.extend(exps.iter().map(|e| (e / z) as f32));
    }
    Tensor::new(logits.shape().to_vec(), out).expect("same shape")
}

/// Mean softmax cross-entropy and its gradient with respect to the logits.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let n = logits.batch();
    let k = logits.shape().get(1).copied().unwrap_or(0);
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &y) in logits.data().chunks_exact(k).zip(labels) {
        if y >= k {
            return Err(Error::Config(format!("label {y} out of range for {k} classes")));
        }
        let m = row.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b)) as f64;
        let exps: Vec<f64> = row.iter().map(|&v| (v as f64 - m).exp()).collect();
        let z: f64 = exps.iter().sum();
        loss += z.ln() - (row[y] as f64 - m);
        for (j, e) in exps.iter().enumerate() {
            let p = e / z;
            let t = if j == y { 1.0 } else { 0.0 };
            grad.push(((p - t) / n as f64) as f32);
        }
    }
    let loss = loss / n as f64;
    if !loss.is_finite() {
        return Err(Error::Numerical {
            epoch: None,
            message: "cross-entropy is not finite".into(),
        });
    }
    Ok((loss, Tensor::new(logits.shape().to_vec(), grad)?))
}

/// Mean squared error over all outputs and its gradient.
pub fn mean_squared_error(pred: &Tensor, targets: &[f32]) -> Result<(f64, Tensor)> {
    if targets.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: targets.len(),
        });
    }
    let m = pred.len().max(1) as f64;
    let mut loss = 0.0f64;
    let grad = pred
        .data()
        .iter()
        .zip(targets)
        .map(|(&p, &t)| {
            let d = p as f64 - t as f64;
            loss += d * d;
            (2.0 * d / m) as f32
        })
        .collect();
    let loss = loss / m;
    if !loss.is_finite() {
        return Err(Error::Numerical {
            epoch: None,
            message: "squared error is not finite".into(),
        });
    }
    Ok((loss, Tensor::new(pred.shape().to_vec(), grad)?))
}

/// Cross-entropy loss of `model` on a labelled batch, with per-parameter gradients.
pub fn loss_and_grad(model: &Network, batch: &Tensor, labels: &[usize]) -> Result<(f64, Vec<Tensor>)> {
    let (logits, cache) = model.forward_cached(batch)?;
    let (loss, dlogits) = cross_entropy(&logits, labels)?;
    let grads = model.backward(&cache, &dlogits, 0)?;
    Ok((loss, grads))
}

/// Squared-error counterpart of [`loss_and_grad`] for regression heads.
pub fn regression_loss_and_grad(
    model: &Network,
    batch: &Tensor,
    targets: &[f32],
) -> Result<(f64, Vec<Tensor>)> {
    let (pred, cache) = model.forward_cached(batch)?;
    let (loss, dpred) = mean_squared_error(&pred, targets)?;
    let grads = model.backward(&cache, &dpred, 0)?;
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_prediction_costs_ln3() {
        let logits = Tensor::zeros(vec![4, 3]);
        let (loss, grad) = cross_entropy(&logits, &[0, 1, 2, 0]).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-12);
        assert!((loss - 1.0986).abs() < 1e-4);
        // (1/3 - 1) / 4 on the true class.
        assert!((grad.data()[0] + 2.0 / 12.0).abs() < 1e-7);
    }

    #[test]
    fn confident_correct_prediction_costs_nothing() {
        let logits = Tensor::new(vec![1, 3], vec![0.0, 60.0, 0.0]).unwrap();
        let (loss, _) = cross_entropy(&logits, &[1]).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let logits = Tensor::new(vec![2, 3], vec![1.0, -2.0, 30.0, 0.5, 0.5, 0.5]).unwrap();
        let p = softmax(&logits);
        for row in p.data().chunks(3) {
            assert!((row.iter().sum::<f32>() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn label_out_of_range() {
        let logits = Tensor::zeros(vec![1, 3]);
        assert!(cross_entropy(&logits, &[3]).is_err());
        assert!(cross_entropy(&logits, &[0, 1]).is_err());
    }

    #[test]
    fn squared_error_gradient() {
        let pred = Tensor::new(vec![1, 2], vec![1.0, 3.0]).unwrap();
        let (loss, g) = mean_squared_error(&pred, &[0.0, 1.0]).unwrap();
        assert!((loss - 2.5).abs() < 1e-12);
        assert_eq!(g.data(), &[1.0, 2.0]);
    }
}
