use serde::{Deserialize, Serialize};

use super::Optimizer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augment {
    #[default]
    None,
    RandomCrop,
}

/// Training hyperparameters for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Label used in grid ledgers and reports.
    pub name: String,
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub epochs: u32,
    pub lr_init: f64,
    /// Epochs after which the rate is multiplied by `lr_gamma`.
    pub lr_milestones: Vec<u32>,
    pub lr_gamma: f64,
    /// Linear decay target, used only when there are no milestones.
    pub lr_final: Option<f64>,
    pub augment: Augment,
    /// Number of leading layers whose parameters are never updated.
    pub freeze_prefix: usize,
    pub seed: u64,
    pub input_size: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            name: "baseline".into(),
            optimizer: Optimizer::sgd(),
            batch_size: 16,
            epochs: 20,
            lr_init: 1e-3,
            lr_milestones: Vec::new(),
            lr_gamma: 0.1,
            lr_final: None,
            augment: Augment::None,
            freeze_prefix: 0,
            seed: 0,
            input_size: 64,
        }
    }
}

impl TrainConfig {
    /// Constant 1e-3 SGD, batch 16, 30 epochs, 224 px.
    pub fn f1() -> Self {
        Self {
            name: "F1".into(),
            batch_size: 16,
            epochs: 30,
            lr_init: 1e-3,
            lr_final: Some(1e-3),
            input_size: 224,
            ..Self::default()
        }
    }

    /// SGD 1e-3 stepped down tenfold after epochs 1, 3, 5 and 8; batch 64, 20 epochs.
    pub fn f2() -> Self {
        Self {
            name: "F2".into(),
            batch_size: 64,
            epochs: 20,
            lr_init: 1e-3,
            lr_milestones: vec![1, 3, 5, 8],
            lr_gamma: 0.1,
            input_size: 224,
            ..Self::default()
        }
    }

    /// SGD 1e-2 decaying linearly to 1e-6 over 50 epochs at 64 px.
    pub fn f3() -> Self {
        Self {
            name: "F3".into(),
            batch_size: 16,
            epochs: 50,
            lr_init: 1e-2,
            lr_final: Some(1e-6),
            input_size: 64,
            ..Self::default()
        }
    }

    /// As [`TrainConfig::f3`] at 224 px.
    pub fn f4() -> Self {
        Self {
            name: "F4".into(),
            input_size: 224,
            ..Self::f3()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{}: {m}", self.name)));
        if !(self.lr_init > 0.0 && self.lr_init.is_finite()) {
            return bad(format!("lr_init must be positive, got {}", self.lr_init));
        }
        if !(self.lr_gamma > 0.0 && self.lr_gamma <= 1.0) {
            return bad(format!("lr_gamma must lie in (0, 1], got {}", self.lr_gamma));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.input_size == 0 {
            return bad("batch_size, epochs and input_size must be positive".into());
        }
        if self.lr_milestones.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "milestones must be strictly increasing: {:?}",
                self.lr_milestones
            ));
        }
        if self.lr_milestones.iter().any(|&m| m == 0 || m > self.epochs) {
            return bad(format!(
                "milestones must lie in [1, {}]: {:?}",
                self.epochs, self.lr_milestones
            ));
        }
        if let Some(f) = self.lr_final {
            if !(f > 0.0 && f.is_finite()) {
                return bad(format!("lr_final must be positive, got {f}"));
            }
        }
        match self.optimizer {
            Optimizer::Sgd { momentum } if !(0.0..1.0).contains(&momentum) => {
                bad(format!("momentum must lie in [0, 1), got {momentum}"))
            }
            Optimizer::Adam { beta1, beta2, eps }
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps <= 0.0 =>
            {
                bad("adam betas must lie in [0, 1) and eps be positive".into())
            }
            _ => Ok(()),
        }
    }
}

/// Learning rate in effect during `epoch` (1-based).
///
/// With milestones: `lr_init * lr_gamma^(milestones strictly before epoch)`.
/// Without milestones but with `lr_final`: linear from `lr_init` at epoch 1 to
/// `lr_final` at the last epoch. Otherwise constant.
pub fn lr_at_epoch(cfg: &TrainConfig, epoch: u32) -> f64 {
    if !cfg.lr_milestones.is_empty() {
        let passed = cfg.lr_milestones.iter().filter(|&&m| m < epoch).count();
        return cfg.lr_init * cfg.lr_gamma.powi(passed as i32);
    }
    match cfg.lr_final {
        Some(fin) if cfg.epochs > 1 => {
            let t = (epoch.clamp(1, cfg.epochs) - 1) as f64 / (cfg.epochs - 1) as f64;
            cfg.lr_init + (fin - cfg.lr_init) * t
        }
        _ => cfg.lr_init,
    }
}
