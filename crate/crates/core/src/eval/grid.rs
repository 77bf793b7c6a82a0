use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GateInput;
use crate::cnn::{train, DatasetSplits, ModelSpec, Network, TrainConfig, TrainingHistory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<TrainingHistory>,
    /// Test Top-1 (%) of the better of the best-validation and last models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_test_top1: Option<f64>,
    /// Message of a numerical failure; such runs are left out of the summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerical_error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub p2_ba: Option<f64>,
    pub p2_avg: Option<f64>,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub architecture: ModelSpec,
    pub runs: Vec<GridRun>,
    pub summary: GridSummary,
}

pub fn summarize(runs: &[GridRun]) -> GridSummary {
    let scores: Vec<f64> = runs.iter().filter_map(|r| r.best_test_top1).collect();
    let failed = runs.iter().filter(|r| r.numerical_error.is_some()).count();
    let (p2_ba, p2_avg) = if scores.is_empty() {
        (None, None)
    } else {
        (
            Some(scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            Some(scores.iter().sum::<f64>() / scores.len() as f64),
        )
    };
    GridSummary {
        p2_ba,
        p2_avg,
        completed: scores.len(),
        failed,
    }
}

/// Trains one fresh network per variant, each initialized from the variant's seed.
pub fn grid_run(spec: &ModelSpec, variants: &[TrainConfig], data: &DatasetSplits) -> Result<GridReport> {
    if variants.is_empty() {
        return Err(Error::Empty("variant list"));
    }
    for v in variants {
        v.validate()?;
    }
    let runs = variants
        .par_iter()
        .map(|cfg| -> Result<GridRun> {
            let mut spec = spec.clone();
            spec.input_size = cfg.input_size as usize;
            let mut net = Network::new(&spec, cfg.seed)?;
            match train(&mut net, data, cfg, None) {
                Ok(out) => Ok(GridRun {
                    config: cfg.clone(),
                    best_test_top1: Some(out.history.best_of_best_and_last()),
                    history: Some(out.history),
                    numerical_error: None,
                }),
                Err(e @ Error::Numerical { .. }) => Ok(GridRun {
                    config: cfg.clone(),
                    history: None,
                    best_test_top1: None,
                    numerical_error: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridReport {
        architecture: spec.clone(),
        summary: summarize(&runs),
        runs,
    })
}

/// First-phase gate row for a trained model.
pub fn gate_input(name: &str, family: &str, history: &TrainingHistory) -> GateInput {
    GateInput {
        model_name: name.to_string(),
        family: family.to_string(),
        t_e: history.mean_epoch_seconds(),
        p1_ba: history.best_of_best_and_last(),
        b_e: Some(history.best_epoch),
    }
}

/// Approximation of the second-phase grid for non-YOLO networks.
pub fn phase2_grid() -> Vec<TrainConfig> {
    serde_json::from_str(include_str!("../../data/grids/phase2_grid.json")).expect("bundled grid parses")
}

/// The four third-phase setups.
pub fn phase3_setups() -> Vec<TrainConfig> {
    serde_json::from_str(include_str!("../../data/grids/phase3_setups.json")).expect("bundled grid parses")
}
