use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{image_dimensions, load_image, Image};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

fn default_fps() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    /// Relative paths are resolved against the manifest's directory.
    pub frame_dir: PathBuf,
    pub frame_count: u32,
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub videos: Vec<VideoEntry>,
    #[serde(default)]
    pub splits: BTreeMap<String, Split>,
    #[serde(skip)]
    root: PathBuf,
}

impl DatasetManifest {
    pub fn new(videos: Vec<VideoEntry>) -> Self {
        Self {
            videos,
            splits: BTreeMap::new(),
            root: PathBuf::new(),
        }
    }

    pub fn with_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.root = root.into();
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m.with_root(root))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn video(&self, id: &str) -> Option<&VideoEntry> {
        self.videos.iter().find(|v| v.video_id == id)
    }

    pub fn frame_dir(&self, entry: &VideoEntry) -> PathBuf {
        if entry.frame_dir.is_absolute() {
            entry.frame_dir.clone()
        } else {
            self.root.join(&entry.frame_dir)
        }
    }

    pub fn videos_in(&self, split: Split) -> Vec<&VideoEntry> {
        self.videos
            .iter()
            .filter(|v| self.splits.get(&v.video_id) == Some(&split))
            .collect()
    }

    /// Checks that every video's frames exist and that splits cover every video.
    pub fn validate(&self) -> Result<()> {
        for v in &self.videos {
            let frames = scan_frames(&self.frame_dir(v))?;
            check_contiguous(&v.video_id, &frames, v.frame_count)?;
        }
        if !self.splits.is_empty() {
            let missing: Vec<&str> = self
                .videos
                .iter()
                .filter(|v| !self.splits.contains_key(&v.video_id))
                .map(|v| v.video_id.as_str())
                .collect();
            if !missing.is_empty() {
                return Err(Error::Split(format!("videos without a split: {missing:?}")));
            }
        }
        Ok(())
    }

    pub fn open(&self, id: &str) -> Result<DiskVideo> {
        let entry = self
            .video(id)
            .ok_or_else(|| Error::Dataset(format!("video {id:?} is not in the manifest")))?;
        DiskVideo::open(entry.clone(), &self.frame_dir(entry))
    }
}

/// Random access to the frames of one video, indexed from 1.
pub trait FrameSource: Send + Sync {
    fn video_id(&self) -> &str;
    fn frame_count(&self) -> u32;
    fn dimensions(&self) -> (u32, u32);
    fn frame(&self, index: u32) -> Result<Image>;
}

#[derive(Debug, Clone)]
pub struct DiskVideo {
    entry: VideoEntry,
    frames: BTreeMap<u32, PathBuf>,
}

impl DiskVideo {
    pub fn open(entry: VideoEntry, dir: &Path) -> Result<Self> {
        let frames = scan_frames(dir)?;
        check_contiguous(&entry.video_id, &frames, entry.frame_count)?;
        Ok(Self { entry, frames })
    }

    pub fn entry(&self) -> &VideoEntry {
        &self.entry
    }

    pub fn frame_path(&self, index: u32) -> Option<&Path> {
        self.frames.get(&index).map(PathBuf::as_path)
    }
}

impl FrameSource for DiskVideo {
    fn video_id(&self) -> &str {
        &self.entry.video_id
    }

    fn frame_count(&self) -> u32 {
        self.entry.frame_count
    }

    fn dimensions(&self) -> (u32, u32) {
        (self.entry.width, self.entry.height)
    }

    fn frame(&self, index: u32) -> Result<Image> {
        let path = self
            .frames
            .get(&index)
            .ok_or_else(|| Error::Dataset(format!("{}: no frame {index}", self.entry.video_id)))?;
        load_image(path)
    }
}

fn frame_index(path: &Path) -> Option<u32> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    if !matches!(ext.as_str(), "png" | "jpg" | "jpeg") {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    let digits = stem.len() - stem.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    stem[stem.len() - digits..].parse().ok()
}

/// Numbered PNG/JPEG files in `dir`, keyed by the trailing number of their name.
pub fn scan_frames(dir: &Path) -> Result<BTreeMap<u32, PathBuf>> {
    let mut frames = BTreeMap::new();
    for item in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = item.map_err(|e| Error::io(dir, e))?.path();
        if let Some(i) = frame_index(&path) {
            if let Some(prev) = frames.insert(i, path.clone()) {
                return Err(Error::Dataset(format!(
                    "frame {i} appears twice: {} and {}",
                    prev.display(),
                    path.display()
                )));
            }
        }
    }
    Ok(frames)
}

fn check_contiguous(video: &str, frames: &BTreeMap<u32, PathBuf>, count: u32) -> Result<()> {
    let missing: Vec<u32> = (1..=count).filter(|i| !frames.contains_key(i)).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Gap {
            video: video.to_string(),
            missing,
        })
    }
}

/// Builds a manifest entry from a directory of numbered frames.
pub fn ingest_video(dir: &Path, video_id: &str) -> Result<VideoEntry> {
    let frames = scan_frames(dir)?;
    let Some(&last) = frames.keys().next_back() else {
        return Err(Error::Dataset(format!("{}: no frames found", dir.display())));
    };
    check_contiguous(video_id, &frames, last)?;
    let mut dims = None;
    for path in frames.values() {
        let found = image_dimensions(path)?;
        match dims {
            None => dims = Some(found),
            Some(expected) if expected != found => {
                return Err(Error::Dimension {
                    path: path.clone(),
                    expected,
                    found,
                })
            }
            _ => {}
        }
    }
    let (width, height) = dims.expect("at least one frame");
    Ok(VideoEntry {
        video_id: video_id.to_string(),
        frame_dir: dir.to_path_buf(),
        frame_count: last,
        fps: default_fps(),
        width,
        height,
    })
}

/// Ingests every subdirectory of `root` as one video, named after the directory.
///
/// Entries of `previous` keep their split assignment and fps.
pub fn ingest_frames(root: &Path, previous: Option<&DatasetManifest>) -> Result<DatasetManifest> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut videos = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let id = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let mut entry = ingest_video(&dir, &id)?;
        entry.frame_dir = PathBuf::from(&id);
        if let Some(prev) = previous.and_then(|m| m.video(&id)) {
            entry.fps = prev.fps;
        }
        videos.push(entry);
    }
    let mut m = DatasetManifest::new(videos).with_root(root);
    if let Some(prev) = previous {
        m.splits = prev
            .splits
            .iter()
            .filter(|(id, _)| m.video(id).is_some())
            .map(|(k, v)| (k.clone(), *v))
            .collect();
    }
    Ok(m)
}

/// Videos per split: floor of `n * ratio`, then leftover videos go one each to
/// the splits with the largest fractional parts (earlier split on ties).
pub fn split_counts(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!("ratios {ratios:?} must be non-negative and sum to 1")));
    }
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts = [0usize; 3];
    for i in 0..3 {
        counts[i] = (exact[i] + 1e-9).floor() as usize;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - counts[a] as f64;
        let fb = exact[b] - counts[b] as f64;
        if (fa - fb).abs() < 1e-9 {
            a.cmp(&b)
        } else {
            fb.total_cmp(&fa)
        }
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    for i in 0..3 {
        if ratios[i] > 0.0 && counts[i] == 0 {
            return Err(Error::Split(format!(
                "{n} videos cannot fill the {} split with ratio {}",
                Split::ALL[i],
                ratios[i]
            )));
        }
    }
    Ok(counts)
}

/// Assigns whole videos to train/val/test after a seeded shuffle.
pub fn build_splits(manifest: &DatasetManifest, ratios: [f64; 3], seed: u64) -> Result<DatasetManifest> {
    let n = manifest.videos.len();
    if n < 3 {
        return Err(Error::Split(format!("{n} videos are fewer than the 3 splits")));
    }
    let counts = split_counts(n, ratios)?;
    let mut ids: Vec<&str> = manifest.videos.iter().map(|v| v.video_id.as_str()).collect();
    ids.sort_unstable();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = manifest.clone();
    out.splits.clear();
    let mut it = ids.into_iter();
    for (split, count) in Split::ALL.into_iter().zip(counts) {
        for id in it.by_ref().take(count) {
            out.splits.insert(id.to_string(), split);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn manifest(n: usize) -> DatasetManifest {
        DatasetManifest::new(
            (0..n)
                .map(|i| VideoEntry {
                    video_id: format!("v{i:02}"),
                    frame_dir: format!("v{i:02}").into(),
                    frame_count: 1,
                    fps: 30.0,
                    width: 4,
                    height: 4,
                })
                .collect(),
        )
    }

    fn count(m: &DatasetManifest) -> [usize; 3] {
        Split::ALL.map(|s| m.videos_in(s).len())
    }

    #[test]
    fn reference_split_sizes() {
        let r = [0.6, 0.2, 0.2];
        assert_eq!(count(&build_splits(&manifest(40), r, 1).unwrap()), [24, 8, 8]);
        assert_eq!(count(&build_splits(&manifest(30), r, 1).unwrap()), [18, 6, 6]);
        assert_eq!(split_counts(11, r).unwrap(), [7, 2, 2]);
        assert_eq!(split_counts(7, r).unwrap(), [4, 2, 1]);
    }

    #[test]
    fn too_few_videos() {
        assert!(matches!(build_splits(&manifest(2), [0.6, 0.2, 0.2], 0), Err(Error::Split(_))));
        assert!(matches!(build_splits(&manifest(3), [0.5, 0.2, 0.2], 0), Err(Error::Split(_))));
    }

    #[test]
    fn same_seed_same_assignment() {
        let m = manifest(40);
        assert_eq!(
            build_splits(&m, [0.6, 0.2, 0.2], 5).unwrap().splits,
            build_splits(&m, [0.6, 0.2, 0.2], 5).unwrap().splits
        );
    }

    #[test]
    fn frame_numbers_come_from_the_name_suffix() {
        assert_eq!(frame_index(Path::new("a/frame_00012.png")), Some(12));
        assert_eq!(frame_index(Path::new("7.JPG")), Some(7));
        assert_eq!(frame_index(Path::new("frame.png")), None);
        assert_eq!(frame_index(Path::new("12.txt")), None);
    }

    proptest! {
        #[test]
        fn splits_partition_videos(n in 4usize..80, seed in any::<u64>()) {
            let m = build_splits(&manifest(n), [0.6, 0.2, 0.2], seed).unwrap();
            prop_assert_eq!(m.splits.len(), n);
            prop_assert_eq!(count(&m).iter().sum::<usize>(), n);
            prop_assert!(m.videos.iter().all(|v| m.splits.contains_key(&v.video_id)));
        }
    }
}
