use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateInput {
    pub model_name: String,
    pub family: String,
    /// Seconds per training epoch.
    pub t_e: f64,
    /// Top-1 (%) of the better of the best and last models.
    pub p1_ba: f64,
    /// Epoch of best validation accuracy; absent when not reported.
    #[serde(default)]
    pub b_e: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateThresholds {
    /// Top-1 must exceed this.
    pub min_top1: f64,
    /// Epoch time must stay below this.
    pub max_epoch_seconds: f64,
    /// Best epoch must exceed this.
    pub min_best_epoch: u32,
}

impl Default for GateThresholds {
    fn default() -> Self {
        Self {
            min_top1: 70.0,
            max_epoch_seconds: 100.0,
            min_best_epoch: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateReason {
    Criterion { name: String, passed: bool, detail: String },
    FamilyDedup { kept: String },
    FamilyBest,
    Exception,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub model_name: String,
    pub selected: bool,
    pub reasons: Vec<GateReason>,
}

/// Phase-1 downselection: threshold tests, best passer per family, then exceptions.
///
/// Decisions are returned in input order.
pub fn phase1_gate(
    inputs: &[GateInput],
    thresholds: &GateThresholds,
    exceptions: &[String],
) -> Result<Vec<GateDecision>> {
    let mut seen = HashSet::new();
    for g in inputs {
        if !seen.insert(g.model_name.as_str()) {
            return Err(Error::DuplicateName(g.model_name.clone()));
        }
    }
    let mut passed = Vec::with_capacity(inputs.len());
    let mut reasons: Vec<Vec<GateReason>> = Vec::with_capacity(inputs.len());
    for g in inputs {
        let top1 = g.p1_ba > thresholds.min_top1;
        let time = g.t_e < thresholds.max_epoch_seconds;
        let epoch = g.b_e.is_none_or(|e| e > thresholds.min_best_epoch);
        let epoch_detail = match g.b_e {
            Some(e) => format!("B_E {e} > {}", thresholds.min_best_epoch),
            None => "B_E not reported".to_string(),
        };
        reasons.push(vec![
            GateReason::Criterion {
                name: "top1".into(),
                passed: top1,
                detail: format!("P1_BA {:.2} > {:.2}", g.p1_ba, thresholds.min_top1),
            },
            GateReason::Criterion {
                name: "epoch_time".into(),
                passed: time,
                detail: format!("T_E {:.2} < {:.2}", g.t_e, thresholds.max_epoch_seconds),
            },
            GateReason::Criterion {
                name: "best_epoch".into(),
                passed: epoch,
                detail: epoch_detail,
            },
        ]);
        passed.push(top1 && time && epoch);
    }

    let mut best: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, g) in inputs.iter().enumerate().filter(|(i, _)| passed[*i]) {
        let slot = best.entry(g.family.as_str()).or_insert(i);
        let cur = &inputs[*slot];
        if g.p1_ba > cur.p1_ba || (g.p1_ba == cur.p1_ba && g.model_name < cur.model_name) {
            *slot = i;
        }
    }

    let mut out = Vec::with_capacity(inputs.len());
    for (i, (g, mut why)) in inputs.iter().zip(reasons).enumerate() {
        let mut selected = false;
        if passed[i] {
            let winner = best[g.family.as_str()];
            if winner == i {
                selected = true;
                why.push(GateReason::FamilyBest);
            } else {
                why.push(GateReason::FamilyDedup {
                    kept: inputs[winner].model_name.clone(),
                });
            }
        }
        if exceptions.iter().any(|e| e == &g.model_name) {
            selected = true;
            why.push(GateReason::Exception);
        }
        out.push(GateDecision {
            model_name: g.model_name.clone(),
            selected,
            reasons: why,
        });
    }
    Ok(out)
}

/// Published first-phase measurements of fifteen pretrained classifiers.
pub fn phase1_reference_rows() -> Vec<GateInput> {
    serde_json::from_str(include_str!("../../data/phase1_models.json")).expect("bundled table parses")
}

pub fn phase1_reference_exceptions() -> Vec<String> {
    vec!["Inception V3".into(), "SqueezeNet 1.0".into()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, family: &str, t_e: f64, p1: f64, b_e: Option<u32>) -> GateInput {
        GateInput {
            model_name: name.into(),
            family: family.into(),
            t_e,
            p1_ba: p1,
            b_e,
        }
    }

    #[test]
    fn empty_input() {
        assert!(phase1_gate(&[], &GateThresholds::default(), &[]).unwrap().is_empty());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let r = row("a", "f", 1.0, 80.0, None);
        assert!(matches!(
            phase1_gate(&[r.clone(), r], &GateThresholds::default(), &[]),
            Err(Error::DuplicateName(_))
        ));
    }

    #[test]
    fn family_tie_goes_to_the_smaller_name() {
        let rows = [row("b", "f", 1.0, 80.0, Some(3)), row("a", "f", 1.0, 80.0, Some(3))];
        let d = phase1_gate(&rows, &GateThresholds::default(), &[]).unwrap();
        assert!(!d[0].selected && d[1].selected);
    }

    #[test]
    fn thresholds_are_strict() {
        let rows = [
            row("top1", "a", 1.0, 70.0, Some(2)),
            row("time", "b", 100.0, 90.0, Some(2)),
            row("epoch", "c", 1.0, 90.0, Some(1)),
            row("ok", "d", 99.99, 70.01, Some(2)),
        ];
        let d = phase1_gate(&rows, &GateThresholds::default(), &[]).unwrap();
        assert_eq!(d.iter().map(|d| d.selected).collect::<Vec<_>>(), [false, false, false, true]);
        assert!(d.iter().all(|d| !d.reasons.is_empty()));
    }

    #[test]
    fn mobilenet_v2_is_deduplicated() {
        let d = phase1_gate(&phase1_reference_rows(), &GateThresholds::default(), &phase1_reference_exceptions()).unwrap();
        let v2 = d.iter().find(|d| d.model_name == "MobileNetv2").unwrap();
        assert!(!v2.selected);
        assert!(v2.reasons.contains(&GateReason::FamilyDedup {
            kept: "MobileNetv3-small".into()
        }));
    }
}
