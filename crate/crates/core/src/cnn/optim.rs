use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd {
        #[serde(default = "default_momentum")]
        momentum: f64,
    },
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_momentum() -> f64 {
    0.9
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Optimizer {
    pub fn sgd() -> Self {
        Optimizer::Sgd {
            momentum: default_momentum(),
        }
    }

    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Sgd { .. } => "sgd",
            Optimizer::Adam { .. } => "adam",
        }
    }
}

/// Heavy-ball SGD: `v = momentum * v + g; p -= lr * v`.
pub fn sgd_step(params: &mut [f32], grads: &[f32], velocity: &mut [f32], lr: f64, momentum: f64) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), velocity.len());
    let lr = lr as f32;
    let mu = momentum as f32;
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = mu * *v + g;
        *p -= lr * *v;
    }
}

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// Bias-corrected Adam update.
pub fn adam_step(
    params: &mut [f32],
    grads: &[f32],
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    assert_eq!(params.len(), grads.len());
    state.t += 1;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i] as f64;
        let m = beta1 * state.m[i] as f64 + (1.0 - beta1) * g;
        let v = beta2 * state.v[i] as f64 + (1.0 - beta2) * g * g;
        state.m[i] = m as f32;
        state.v[i] = v as f32;
        let update = lr * (m / c1) / ((v / c2).sqrt() + eps);
        params[i] = (params[i] as f64 - update) as f32;
    }
}

/// Optimizer state for every parameter tensor of a network.
#[derive(Debug, Clone)]
pub(crate) enum OptimizerState {
    Sgd { momentum: f64, velocity: Vec<Vec<f32>> },
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
        states: Vec<AdamState>,
    },
}

impl OptimizerState {
    pub(crate) fn new(opt: Optimizer, sizes: &[usize]) -> Self {
        match opt {
            Optimizer::Sgd { momentum } => OptimizerState::Sgd {
                momentum,
                velocity: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            },
            Optimizer::Adam { beta1, beta2, eps } => OptimizerState::Adam {
                beta1,
                beta2,
                eps,
                states: sizes.iter().map(|&n| AdamState::new(n)).collect(),
            },
        }
    }

    /// Updates the tensors whose `trainable` flag is set.
    pub(crate) fn step(&mut self, params: Vec<&mut [f32]>, grads: &[super::Tensor], trainable: &[bool], lr: f64) {
        for (i, p) in params.into_iter().enumerate() {
            if !trainable[i] {
                continue;
            }
            match self {
                OptimizerState::Sgd { momentum, velocity } => {
                    sgd_step(p, grads[i].data(), &mut velocity[i], lr, *momentum)
                }
                OptimizerState::Adam {
                    beta1,
                    beta2,
                    eps,
                    states,
                } => adam_step(p, grads[i].data(), &mut states[i], lr, *beta1, *beta2, *eps),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut p = vec![1.0, -2.0, 3.5];
        let mut v = vec![0.0; 3];
        sgd_step(&mut p, &[0.3, 0.1, -9.0], &mut v, 0.0, 0.9);
        assert_eq!(p, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn plain_sgd_step() {
        let mut p = vec![1.0];
        let mut v = vec![0.0];
        sgd_step(&mut p, &[0.5], &mut v, 0.1, 0.0);
        assert!((p[0] - 0.95).abs() < 1e-7);
    }

    #[test]
    fn momentum_accumulates() {
        let mut p = vec![0.0];
        let mut v = vec![0.0];
        sgd_step(&mut p, &[1.0], &mut v, 0.1, 0.9);
        sgd_step(&mut p, &[1.0], &mut v, 0.1, 0.9);
        // 0.1 * 1 + 0.1 * 1.9
        assert!((p[0] + 0.29).abs() < 1e-6);
    }

    #[test]
    fn first_adam_step_has_magnitude_lr() {
        for g in [0.001f32, 0.5, -3.0, 40.0] {
            let mut p = vec![1.0f32];
            let mut s = AdamState::new(1);
            adam_step(&mut p, &[g], &mut s, 1e-3, 0.9, 0.999, 1e-8);
            let step = (1.0 - p[0] as f64).abs();
            assert!((step - 1e-3).abs() < 1e-6, "g={g} step={step}");
        }
    }

    #[test]
    fn serde_defaults() {
        let o: Optimizer = serde_json::from_str(r#"{"kind":"sgd"}"#).unwrap();
        assert_eq!(o, Optimizer::sgd());
        let a: Optimizer = serde_json::from_str(r#"{"kind":"adam"}"#).unwrap();
        assert_eq!(a, Optimizer::adam());
    }
}
