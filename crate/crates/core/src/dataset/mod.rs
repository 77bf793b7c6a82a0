//! Manifests, splits, sampling, annotations and the synthetic corpus.

mod annotation;
mod corpus;
mod manifest;
mod sampling;
mod synth;

pub use annotation::{
    agreement_report, annotations_to_jsonl, consensus_labels, majority_label, parse_annotations,
    read_annotations, valid_id, write_atomic, AgreementReport, Annotation, AnnotationRecord,
    AnnotationStore, ConflictPolicy, FrameAgreement, Majority, PairAgreement, AUDIT_FILE,
};
pub use corpus::{build_corpus, crop_frames, synthetic_corpus, CorpusConfig, CorpusVideo};
pub use manifest::{
    build_splits, ingest_frames, ingest_video, scan_frames, split_counts, DatasetManifest, DiskVideo,
    FrameSource, Split, VideoEntry, MANIFEST_FILE,
};
pub use sampling::{balanced_sample, FrameRef};
pub use synth::{
    frame_file_name, synth_generate, ClassSchedule, GroundTruthRecord, SyntheticConfig, SyntheticVideo,
    GROUND_TRUTH_FILE,
};

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::Result;

/// Reads a synthetic ground-truth file, keyed by frame.
pub fn read_ground_truth(path: &Path) -> Result<BTreeMap<u32, GroundTruthRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let rec: GroundTruthRecord = serde_json::from_str(line)?;
        out.insert(rec.frame, rec);
    }
    Ok(out)
}
