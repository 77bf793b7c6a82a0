mod boxplot;
mod e2e;
mod gate;
mod grid;
mod metrics;

pub use boxplot::{boxplot, quantile, BoxplotStats, BoxplotSummary};
pub use e2e::{
    e2e_evaluate, e2e_suite, summarize_suite, E2EConfig, FrameTruth, RecordingSource, SuiteReport, SuiteVideo, VideoResult,
    VideoStatus,
};
pub use gate::{
    phase1_gate, phase1_reference_exceptions, phase1_reference_rows, GateDecision, GateInput, GateReason, GateThresholds,
};
pub use grid::{gate_input, grid_run, summarize, phase2_grid, phase3_setups, GridReport, GridRun, GridSummary};
pub use metrics::{confusion, iou, metrics, Averaging, ConfusionMatrix, MetricsReport};
