use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::cnn::WetnessClass;
use crate::error::{Error, Result};
use crate::imaging::BoundingBox;

/// One line of an annotation file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub frame: u32,
    pub class: Option<WetnessClass>,
    #[serde(rename = "box")]
    pub bbox: Option<BoundingBox>,
}

impl AnnotationRecord {
    pub fn validate(&self, frame_count: Option<u32>) -> Result<()> {
        if self.class.is_none() && self.bbox.is_none() {
            return Err(Error::Dataset(format!("frame {}: annotation has neither class nor box", self.frame)));
        }
        let limit = frame_count.unwrap_or(u32::MAX);
        if self.frame == 0 || self.frame > limit {
            return Err(Error::Dataset(format!("frame {} is outside 1..={limit}", self.frame)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub video_id: String,
    pub frame_index: u32,
    pub annotator_id: String,
    pub wetness: Option<WetnessClass>,
    #[serde(rename = "box")]
    pub bbox: Option<BoundingBox>,
}

impl Annotation {
    pub fn record(&self) -> AnnotationRecord {
        AnnotationRecord {
            frame: self.frame_index,
            class: self.wetness,
            bbox: self.bbox,
        }
    }
}

/// Parses JSON lines; a later record for the same frame replaces an earlier one.
pub fn parse_annotations(text: &str) -> Result<BTreeMap<u32, AnnotationRecord>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: AnnotationRecord = serde_json::from_str(line)
            .map_err(|e| Error::Dataset(format!("annotation line {}: {e}", i + 1)))?;
        out.insert(rec.frame, rec);
    }
    Ok(out)
}

pub fn annotations_to_jsonl(records: &BTreeMap<u32, AnnotationRecord>) -> Result<String> {
    let mut out = String::new();
    for rec in records.values() {
        out.push_str(&serde_json::to_string(rec)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_annotations(path: &Path) -> Result<BTreeMap<u32, AnnotationRecord>> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse_annotations(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Identifiers become path components, so only a safe alphabet is allowed.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        && !id.starts_with('.')
}

#[derive(Serialize)]
struct AuditLine<'a> {
    unix_ms: u128,
    video: &'a str,
    annotator: &'a str,
    #[serde(flatten)]
    record: &'a AnnotationRecord,
}

/// Annotation files laid out as `<dir>/<video>/<annotator>.jsonl`, with an
/// append-only `audit.log`.
#[derive(Debug, Clone)]
pub struct AnnotationStore {
    dir: PathBuf,
    locks: Arc<Mutex<HashMap<(String, String), Arc<Mutex<()>>>>>,
    audit: Arc<Mutex<()>>,
}

pub const AUDIT_FILE: &str = "audit.log";

impl AnnotationStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            locks: Arc::default(),
            audit: Arc::default(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn check(video: &str, annotator: &str) -> Result<()> {
        if valid_id(video) && valid_id(annotator) {
            Ok(())
        } else {
            Err(Error::Dataset(format!("invalid video or annotator id {video:?}/{annotator:?}")))
        }
    }

    pub fn path(&self, video: &str, annotator: &str) -> PathBuf {
        self.dir.join(video).join(format!("{annotator}.jsonl"))
    }

    pub fn load(&self, video: &str, annotator: &str) -> Result<BTreeMap<u32, AnnotationRecord>> {
        Self::check(video, annotator)?;
        read_annotations(&self.path(video, annotator))
    }

    /// Annotators with a file for `video`, sorted.
    pub fn annotators(&self, video: &str) -> Result<Vec<String>> {
        let dir = self.dir.join(video);
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&dir, e)),
        };
        let mut out: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let p = e.path();
                (p.extension()? == "jsonl").then(|| p.file_stem()?.to_str().map(String::from))?
            })
            .collect();
        out.sort();
        Ok(out)
    }

    /// Class labels of every annotator of `video`.
    pub fn labels(&self, video: &str) -> Result<BTreeMap<String, BTreeMap<u32, WetnessClass>>> {
        let mut out = BTreeMap::new();
        for a in self.annotators(video)? {
            let labels = self
                .load(video, &a)?
                .into_values()
                .filter_map(|r| r.class.map(|c| (r.frame, c)))
                .collect();
            out.insert(a, labels);
        }
        Ok(out)
    }

    /// Inserts or replaces the record for its frame. Writers of the same file are serialized.
    pub fn upsert(&self, video: &str, annotator: &str, record: AnnotationRecord) -> Result<()> {
        Self::check(video, annotator)?;
        let lock = {
            let mut locks = self.locks.lock().unwrap_or_else(|p| p.into_inner());
            locks
                .entry((video.to_string(), annotator.to_string()))
                .or_default()
                .clone()
        };
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        let path = self.path(video, annotator);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut records = read_annotations(&path)?;
        records.insert(record.frame, record);
        write_atomic(&path, annotations_to_jsonl(&records)?.as_bytes())?;
        self.audit(video, annotator, &record)
    }

    fn audit(&self, video: &str, annotator: &str, record: &AnnotationRecord) -> Result<()> {
        let unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let mut line = serde_json::to_string(&AuditLine {
            unix_ms,
            video,
            annotator,
            record,
        })?;
        line.push('\n');
        let path = self.dir.join(AUDIT_FILE);
        let _guard = self.audit.lock().unwrap_or_else(|p| p.into_inner());
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        f.write_all(line.as_bytes()).map_err(|e| Error::io(&path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Majority {
    Dry,
    Wet,
    Bubble,
    Conflict,
}

impl Majority {
    pub fn label(self) -> Option<WetnessClass> {
        match self {
            Majority::Dry => Some(WetnessClass::Dry),
            Majority::Wet => Some(WetnessClass::Wet),
            Majority::Bubble => Some(WetnessClass::Bubble),
            Majority::Conflict => None,
        }
    }
}

impl From<WetnessClass> for Majority {
    fn from(c: WetnessClass) -> Self {
        match c {
            WetnessClass::Dry => Majority::Dry,
            WetnessClass::Wet => Majority::Wet,
            WetnessClass::Bubble => Majority::Bubble,
        }
    }
}

impl fmt::Display for Majority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label() {
            Some(c) => c.fmt(f),
            None => f.write_str("conflict"),
        }
    }
}

/// Label shared by at least two of the three annotators.
pub fn majority_label(a: WetnessClass, b: WetnessClass, c: WetnessClass) -> Majority {
    if a == b || a == c {
        a.into()
    } else if b == c {
        b.into()
    } else {
        Majority::Conflict
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAgreement {
    pub frame: u32,
    /// One label per annotator, in `AgreementReport::annotators` order.
    pub labels: Vec<WetnessClass>,
    pub majority: Majority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub first: String,
    pub second: String,
    /// Frames labeled by both.
    pub compared: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub annotators: Vec<String>,
    pub frames: Vec<FrameAgreement>,
    pub pairwise: Vec<PairAgreement>,
    pub conflicts: Vec<u32>,
    /// Frames labeled by some but not all annotators.
    pub incomplete: Vec<u32>,
}

/// Per-frame majority and pairwise agreement of exactly three annotators.
pub fn agreement_report(labels: &BTreeMap<String, BTreeMap<u32, WetnessClass>>) -> Result<AgreementReport> {
    if labels.len() != 3 {
        return Err(Error::Coverage(format!(
            "agreement needs exactly 3 annotators, found {}",
            labels.len()
        )));
    }
    if let Some((name, _)) = labels.iter().find(|(_, l)| l.is_empty()) {
        return Err(Error::Coverage(format!("annotator {name:?} has no class labels")));
    }
    let names: Vec<String> = labels.keys().cloned().collect();
    let maps: Vec<&BTreeMap<u32, WetnessClass>> = labels.values().collect();
    let mut all: Vec<u32> = maps.iter().flat_map(|m| m.keys().copied()).collect();
    all.sort_unstable();
    all.dedup();

    let mut frames = Vec::new();
    let mut conflicts = Vec::new();
    let mut incomplete = Vec::new();
    for f in all {
        let got: Vec<WetnessClass> = maps.iter().filter_map(|m| m.get(&f).copied()).collect();
        if got.len() < 3 {
            incomplete.push(f);
            continue;
        }
        let majority = majority_label(got[0], got[1], got[2]);
        if majority == Majority::Conflict {
            conflicts.push(f);
        }
        frames.push(FrameAgreement {
            frame: f,
            labels: got,
            majority,
        });
    }
    let mut pairwise = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            let (mut compared, mut same) = (0usize, 0usize);
            for (f, a) in maps[i] {
                if let Some(b) = maps[j].get(f) {
                    compared += 1;
                    same += (a == b) as usize;
                }
            }
            pairwise.push(PairAgreement {
                first: names[i].clone(),
                second: names[j].clone(),
                compared,
                percent: if compared == 0 { 0.0 } else { 100.0 * same as f64 / compared as f64 },
            });
        }
    }
    Ok(AgreementReport {
        annotators: names,
        frames,
        pairwise,
        conflicts,
        incomplete,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictPolicy {
    #[default]
    Exclude,
    /// Use the first annotator's label (sorted by id) on conflicting frames.
    FirstAnnotator,
}

/// Frame labels derived from an agreement report.
pub fn consensus_labels(report: &AgreementReport, policy: ConflictPolicy) -> BTreeMap<u32, WetnessClass> {
    report
        .frames
        .iter()
        .filter_map(|f| match (f.majority.label(), policy) {
            (Some(c), _) => Some((f.frame, c)),
            (None, ConflictPolicy::FirstAnnotator) => Some((f.frame, f.labels[0])),
            (None, ConflictPolicy::Exclude) => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use WetnessClass::*;

    #[test]
    fn majority_cases() {
        assert_eq!(majority_label(Wet, Wet, Bubble), Majority::Wet);
        assert_eq!(majority_label(Dry, Dry, Dry), Majority::Dry);
        assert_eq!(majority_label(Dry, Wet, Bubble), Majority::Conflict);
        assert_eq!(majority_label(Bubble, Dry, Dry), Majority::Dry);
    }

    fn class() -> impl Strategy<Value = WetnessClass> {
        (0usize..3).prop_map(|c| WetnessClass::from_code(c).unwrap())
    }

    proptest! {
        #[test]
        fn majority_is_permutation_invariant(a in class(), b in class(), c in class()) {
            let m = majority_label(a, b, c);
            for p in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                prop_assert_eq!(majority_label(p.0, p.1, p.2), m);
            }
            let distinct = (a != b) as u8 + (a != c) as u8 + (b != c) as u8;
            prop_assert_eq!(m == Majority::Conflict, distinct == 3);
        }
    }

    #[test]
    fn last_writer_wins_inside_a_file() {
        let text = "{\"frame\":3,\"class\":\"dry\",\"box\":null}\n\n{\"frame\":3,\"class\":\"wet\",\"box\":[1,2,3,4]}\n";
        let recs = parse_annotations(text).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[&3].class, Some(Wet));
        assert_eq!(recs[&3].bbox, Some(BoundingBox::new(1, 2, 3, 4).unwrap()));
        let back = parse_annotations(&annotations_to_jsonl(&recs).unwrap()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn nulls_are_written_explicitly() {
        let rec = AnnotationRecord {
            frame: 1,
            class: Some(Bubble),
            bbox: None,
        };
        assert_eq!(serde_json::to_string(&rec).unwrap(), r#"{"frame":1,"class":"bubble","box":null}"#);
    }

    #[test]
    fn empty_records_are_invalid() {
        let rec = AnnotationRecord {
            frame: 2,
            class: None,
            bbox: None,
        };
        assert!(rec.validate(None).is_err());
        let rec = AnnotationRecord {
            class: Some(Dry),
            ..rec
        };
        assert!(rec.validate(Some(10)).is_ok());
        assert!(rec.validate(Some(1)).is_err());
    }

    #[test]
    fn ids_with_path_separators_are_rejected() {
        assert!(valid_id("annotator-1"));
        assert!(!valid_id("../x"));
        assert!(!valid_id("a/b"));
        assert!(!valid_id(""));
    }

    #[test]
    fn store_round_trip_and_audit() {
        let dir = tempfile::tempdir().unwrap();
        let store = AnnotationStore::new(dir.path());
        let rec = AnnotationRecord {
            frame: 10,
            class: Some(Wet),
            bbox: Some(BoundingBox::new(50, 50, 150, 150).unwrap()),
        };
        store.upsert("v01", "ann1", rec).unwrap();
        store
            .upsert("v01", "ann1", AnnotationRecord { frame: 4, class: Some(Dry), bbox: None })
            .unwrap();
        let back = store.load("v01", "ann1").unwrap();
        assert_eq!(back[&10], rec);
        assert_eq!(back.keys().copied().collect::<Vec<_>>(), vec![4, 10]);
        assert_eq!(store.annotators("v01").unwrap(), vec!["ann1"]);
        let audit = std::fs::read_to_string(dir.path().join(AUDIT_FILE)).unwrap();
        assert_eq!(audit.lines().count(), 2);
        assert!(store.upsert("../v01", "ann1", rec).is_err());
    }

    fn labels(spec: &[(&str, &[WetnessClass])]) -> BTreeMap<String, BTreeMap<u32, WetnessClass>> {
        spec.iter()
            .map(|(n, ls)| (n.to_string(), ls.iter().enumerate().map(|(i, &c)| (i as u32 + 1, c)).collect()))
            .collect()
    }

    #[test]
    fn identical_annotators_fully_agree() {
        let l = [Dry, Dry, Wet, Bubble];
        let r = agreement_report(&labels(&[("a", &l), ("b", &l), ("c", &l)])).unwrap();
        assert!(r.conflicts.is_empty());
        assert!(r.pairwise.iter().all(|p| p.percent == 100.0));
        assert_eq!(r.frames.len(), 4);
    }

    #[test]
    fn two_annotators_are_not_enough() {
        let l = [Dry];
        assert!(matches!(
            agreement_report(&labels(&[("a", &l), ("b", &l)])),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn conflicts_are_listed_and_excluded() {
        let r = agreement_report(&labels(&[("a", &[Dry, Dry]), ("b", &[Dry, Wet]), ("c", &[Wet, Bubble])])).unwrap();
        assert_eq!(r.conflicts, vec![2]);
        let c = consensus_labels(&r, ConflictPolicy::Exclude);
        assert_eq!(c.into_iter().collect::<Vec<_>>(), vec![(1, Dry)]);
        let c = consensus_labels(&r, ConflictPolicy::FirstAnnotator);
        assert_eq!(c[&2], Dry);
    }
}
