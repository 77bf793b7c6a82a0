use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{balanced_sample, build_splits, DatasetManifest, FrameRef, FrameSource, Split, SyntheticConfig, SyntheticVideo, VideoEntry};
use crate::cnn::{DatasetSplits, LabeledImage, WetnessClass};
use crate::detect::{circle_to_box, PaddingVariant};
use crate::error::Result;
use crate::imaging::{crop, BoundingBox};

/// Crops `bbox` out of each listed frame.
pub fn crop_frames(
    source: &dyn FrameSource,
    bbox: &BoundingBox,
    frames: &[(u32, WetnessClass)],
) -> Result<Vec<LabeledImage>> {
    frames
        .par_iter()
        .map(|&(f, label)| {
            Ok(LabeledImage {
                image: crop(&source.frame(f)?, bbox)?,
                label,
            })
        })
        .collect()
}

/// Class-balanced crop corpus drawn from a synthetic suite with video-disjoint splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub synthetic: SyntheticConfig,
    /// Frames per split (train, val, test); each must be a multiple of 3.
    pub sizes: [usize; 3],
    pub ratios: [f64; 3],
    /// Padding applied to the true circle before cropping.
    pub pad: PaddingVariant,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            synthetic: SyntheticConfig::default(),
            sizes: [900, 300, 300],
            ratios: [0.6, 0.2, 0.2],
            pad: PaddingVariant::H30,
            seed: 0,
        }
    }
}

/// One video's contribution to a crop corpus.
pub struct CorpusVideo<'a> {
    pub source: &'a dyn FrameSource,
    /// Crop box applied to every frame of the video.
    pub bbox: BoundingBox,
    pub labels: Vec<(u32, WetnessClass)>,
    pub split: Split,
}

/// Samples `sizes[i]` class-balanced frames from the videos of each split and crops them.
pub fn build_corpus(videos: &[CorpusVideo<'_>], sizes: [usize; 3], seed: u64) -> Result<DatasetSplits> {
    let mut sets: [Vec<LabeledImage>; 3] = Default::default();
    for (i, split) in Split::ALL.into_iter().enumerate() {
        let members: Vec<&CorpusVideo> = videos.iter().filter(|v| v.split == split).collect();
        let pool: Vec<(FrameRef, WetnessClass)> = members
            .iter()
            .flat_map(|v| v.labels.iter().map(|&(f, c)| (FrameRef::new(v.source.video_id(), f), c)))
            .collect();
        let picked = balanced_sample(&pool, sizes[i], seed.wrapping_add(i as u64))?;
        for v in members {
            let frames: Vec<(u32, WetnessClass)> = picked
                .iter()
                .filter(|(r, _)| r.video_id == v.source.video_id())
                .map(|(r, c)| (r.frame, *c))
                .collect();
            sets[i].extend(crop_frames(v.source, &v.bbox, &frames)?);
        }
    }
    let [train, val, test] = sets;
    Ok(DatasetSplits { train, val, test })
}

pub fn synthetic_corpus(cfg: &CorpusConfig) -> Result<DatasetSplits> {
    let suite = SyntheticVideo::suite(&cfg.synthetic)?;
    let manifest = DatasetManifest::new(
        suite
            .iter()
            .map(|v| VideoEntry {
                video_id: v.video_id().to_string(),
                frame_dir: v.video_id().into(),
                frame_count: v.frame_count(),
                fps: 30.0,
                width: cfg.synthetic.width,
                height: cfg.synthetic.height,
            })
            .collect(),
    );
    let manifest = build_splits(&manifest, cfg.ratios, cfg.seed)?;
    let videos = suite
        .iter()
        .map(|v| {
            Ok(CorpusVideo {
                source: v,
                bbox: circle_to_box(&v.circle(), cfg.pad, cfg.synthetic.width, cfg.synthetic.height)?,
                labels: (1..=v.frame_count()).map(|f| (f, v.class_at(f))).collect(),
                split: manifest.splits[v.video_id()],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    build_corpus(&videos, cfg.sizes, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_corpus_is_balanced() {
        let cfg = CorpusConfig {
            synthetic: SyntheticConfig {
                videos: 5,
                frames_per_video: 60,
                ..SyntheticConfig::default()
            },
            sizes: [12, 6, 6],
            ..CorpusConfig::default()
        };
        let data = synthetic_corpus(&cfg).unwrap();
        for (set, n) in [(&data.train, 12), (&data.val, 6), (&data.test, 6)] {
            assert_eq!(set.len(), n);
            for c in WetnessClass::ALL {
                assert_eq!(set.iter().filter(|s| s.label == c).count(), n / 3);
            }
        }
        assert_eq!(synthetic_corpus(&cfg).unwrap().train, data.train);
    }
}
