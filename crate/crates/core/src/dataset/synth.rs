use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_splits, DatasetManifest, FrameSource, VideoEntry};
use crate::cnn::WetnessClass;
use crate::detect::{circle_to_box, PaddingVariant};
use crate::error::{Error, Result};
use crate::imaging::{save_png, BoundingBox, Circle, Image};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassSchedule {
    /// Dry until `bubble_at`, bubble until `wet_at`, then wet. Both are
    /// fractions of the video length, shifted per video by up to `jitter`.
    Progression { bubble_at: f64, wet_at: f64, jitter: f64 },
    Fixed(WetnessClass),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub videos: usize,
    pub frames_per_video: u32,
    pub width: u32,
    pub height: u32,
    pub radius_min: u32,
    pub radius_max: u32,
    /// Minimum free space between the disk and the frame border.
    pub margin: u32,
    pub schedule: ClassSchedule,
    /// Standard deviation of per-pixel Gaussian noise.
    pub noise: f64,
    /// Background level at the frame center.
    pub brightness: f64,
    /// Relative darkening at the frame corners.
    pub vignette: f64,
    pub dry_level: f64,
    pub texture: f64,
    pub bubble_count: [u32; 2],
    /// Blob radius range as a fraction of the stem radius.
    pub bubble_radius: [f64; 2],
    pub bubble_level: f64,
    /// How far a wet disk moves from the dry level toward the background.
    pub wet_transparency: f64,
    pub highlight: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            videos: 20,
            frames_per_video: 900,
            width: 640,
            height: 480,
            radius_min: 25,
            radius_max: 60,
            margin: 40,
            schedule: ClassSchedule::Progression {
                bubble_at: 0.8,
                wet_at: 0.9,
                jitter: 0.04,
            },
            noise: 6.0,
            brightness: 175.0,
            vignette: 0.15,
            dry_level: 55.0,
            texture: 10.0,
            bubble_count: [8, 12],
            bubble_radius: [0.15, 0.28],
            bubble_level: 245.0,
            wet_transparency: 0.4,
            highlight: 50.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.videos == 0 || self.frames_per_video == 0 {
            return bad("videos and frames_per_video must be positive");
        }
        if self.radius_min == 0 || self.radius_min > self.radius_max {
            return bad("radius range must satisfy 0 < radius_min <= radius_max");
        }
        let need = 2 * (self.radius_max + self.margin) + 1;
        if self.width < need || self.height < need {
            return Err(Error::Config(format!(
                "radius range {}..{} with margin {} does not fit a {}x{} frame",
                self.radius_min, self.radius_max, self.margin, self.width, self.height
            )));
        }
        let finite = [
            self.noise,
            self.brightness,
            self.vignette,
            self.dry_level,
            self.texture,
            self.bubble_level,
            self.wet_transparency,
            self.highlight,
        ];
        if finite.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("appearance parameters must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.wet_transparency) || self.vignette >= 1.0 {
            return bad("wet_transparency must be in [0, 1] and vignette below 1");
        }
        if self.bubble_count[0] > self.bubble_count[1]
            || !(self.bubble_radius[0] > 0.0 && self.bubble_radius[0] <= self.bubble_radius[1])
        {
            return bad("bubble ranges must be ordered and positive");
        }
        if let ClassSchedule::Progression {
            bubble_at,
            wet_at,
            jitter,
        } = self.schedule
        {
            if !(0.0 <= bubble_at && bubble_at < wet_at && wet_at <= 1.0 && jitter >= 0.0) {
                return bad("schedule needs 0 <= bubble_at < wet_at <= 1");
            }
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lattice value noise in [-1, 1] with bilinear interpolation.
fn value_noise(seed: u64, x: f64, y: f64, cell: f64) -> f64 {
    let (gx, gy) = (x / cell, y / cell);
    let (x0, y0) = (gx.floor(), gy.floor());
    let (tx, ty) = (gx - x0, gy - y0);
    let at = |i: f64, j: f64| {
        let h = splitmix(seed ^ splitmix((i as i64 as u64) << 32 ^ (j as i64 as u64 & 0xFFFF_FFFF)));
        (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1.0, y0) * tx;
    let bottom = at(x0, y0 + 1.0) * (1.0 - tx) + at(x0 + 1.0, y0 + 1.0) * tx;
    top * (1.0 - ty) + bottom * ty
}

fn coverage(d: f64, r: f64) -> f64 {
    (r + 0.5 - d).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub frame: u32,
    pub circle: Circle,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub class: WetnessClass,
}

/// One synthetic video; frames are rendered on demand.
#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    cfg: SyntheticConfig,
    video_id: String,
    seed: u64,
    circle: Circle,
    background: f64,
    dry_level: f64,
    bubble_start: u32,
    wet_start: u32,
}

impl SyntheticVideo {
    pub fn new(cfg: &SyntheticConfig, index: usize) -> Result<Self> {
        cfg.validate()?;
        let seed = splitmix(cfg.seed ^ splitmix(index as u64 + 1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = rng.random_range(cfg.radius_min..=cfg.radius_max);
        let lo = r + cfg.margin;
        let cx = rng.random_range(lo..cfg.width - lo);
        let cy = rng.random_range(lo..cfg.height - lo);
        let background = cfg.brightness + rng.random_range(-8.0..=8.0);
        let dry_level = cfg.dry_level + rng.random_range(-5.0..=5.0);
        let n = cfg.frames_per_video;
        let (bubble_start, wet_start) = match cfg.schedule {
            ClassSchedule::Progression {
                bubble_at,
                wet_at,
                jitter,
            } => {
                let mut at = |f: f64| {
                    let shift = if jitter > 0.0 { rng.random_range(-jitter..=jitter) } else { 0.0 };
                    ((f + shift).clamp(0.0, 1.0) * n as f64).round() as u32 + 1
                };
                let b = at(bubble_at);
                let w = at(wet_at).max(b);
                (b, w)
            }
            ClassSchedule::Fixed(WetnessClass::Dry) => (n + 1, n + 1),
            ClassSchedule::Fixed(WetnessClass::Bubble) => (1, n + 1),
            ClassSchedule::Fixed(WetnessClass::Wet) => (1, 1),
        };
        Ok(Self {
            cfg: cfg.clone(),
            video_id: format!("v{:02}", index + 1),
            seed,
            circle: Circle {
                cx: cx as i32,
                cy: cy as i32,
                r: r as i32,
            },
            background,
            dry_level,
            bubble_start,
            wet_start,
        })
    }

    /// All videos of a configuration.
    pub fn suite(cfg: &SyntheticConfig) -> Result<Vec<Self>> {
        (0..cfg.videos).map(|i| Self::new(cfg, i)).collect()
    }

    pub fn circle(&self) -> Circle {
        self.circle
    }

    pub fn tight_box(&self) -> BoundingBox {
        circle_to_box(&self.circle, PaddingVariant::NONE, self.cfg.width, self.cfg.height)
            .expect("disk lies inside the frame")
    }

    pub fn class_at(&self, frame: u32) -> WetnessClass {
        if frame < self.bubble_start {
            WetnessClass::Dry
        } else if frame < self.wet_start {
            WetnessClass::Bubble
        } else {
            WetnessClass::Wet
        }
    }

    pub fn ground_truth(&self) -> Vec<GroundTruthRecord> {
        let bbox = self.tight_box();
        (1..=self.cfg.frames_per_video)
            .map(|frame| GroundTruthRecord {
                frame,
                circle: self.circle,
                bbox,
                class: self.class_at(frame),
            })
            .collect()
    }

    pub fn render(&self, frame: u32) -> Image {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.seed ^ splitmix(0xF00D_0000 + frame as u64)));
        let class = self.class_at(frame);
        let (w, h) = (cfg.width, cfg.height);
        let (cx, cy, r) = (self.circle.cx as f64, self.circle.cy as f64, self.circle.r as f64);
        let flicker = rng.random_range(-3.0..=3.0);
        let (hw, hh) = (w as f64 / 2.0, h as f64 / 2.0);
        let corner = hw * hw + hh * hh;
        let blobs: Vec<(f64, f64, f64)> = if class == WetnessClass::Bubble {
            let n = rng.random_range(cfg.bubble_count[0]..=cfg.bubble_count[1]);
            (0..n)
                .map(|_| {
                    let rho = 0.7 * r * rng.random::<f64>().sqrt();
                    let theta = rng.random_range(0.0..std::f64::consts::TAU);
                    let br = r * rng.random_range(cfg.bubble_radius[0]..=cfg.bubble_radius[1]);
                    (cx + rho * theta.cos(), cy + rho * theta.sin(), br)
                })
                .collect()
        } else {
            Vec::new()
        };
        let (hx, hy, hs) = (cx - 0.35 * r, cy - 0.35 * r, 0.15 * r);
        let noise = Normal::new(0.0, cfg.noise.max(f64::MIN_POSITIVE)).expect("valid deviation");
        let t = cfg.wet_transparency;
        let tex_seed = self.seed ^ 0x7E57;

        let mut pixels = Vec::with_capacity((w * h) as usize);
        for y in 0..h {
            let (fy, dy) = (y as f64, y as f64 - hh);
            for x in 0..w {
                let fx = x as f64;
                let dx = fx - hw;
                let bg = self.background * (1.0 - cfg.vignette * (dx * dx + dy * dy) / corner);
                let d = ((fx - cx).powi(2) + (fy - cy).powi(2)).sqrt();
                let cov = coverage(d, r);
                let mut v = bg;
                if cov > 0.0 {
                    let tex = cfg.texture * value_noise(tex_seed, fx, fy, 5.0);
                    let disk = match class {
                        WetnessClass::Dry => self.dry_level + tex,
                        WetnessClass::Wet => {
                            let hl = cfg.highlight
                                * (-((fx - hx).powi(2) + (fy - hy).powi(2)) / (2.0 * hs * hs)).exp();
                            self.dry_level + t * (bg - self.dry_level) + (1.0 - t) * tex + hl
                        }
                        WetnessClass::Bubble => {
                            let mut v = self.dry_level + tex;
                            for &(bx, by, br) in &blobs {
                                let bd = ((fx - bx).powi(2) + (fy - by).powi(2)).sqrt();
                                let bc = coverage(bd, br);
                                if bc > 0.0 {
                                    v += bc * (cfg.bubble_level - v);
                                }
                            }
                            v
                        }
                    };
                    v = bg * (1.0 - cov) + disk * cov;
                }
                let noisy = if cfg.noise > 0.0 { v + noise.sample(&mut rng) } else { v };
                pixels.push((noisy + flicker).round().clamp(0.0, 255.0) as u8);
            }
        }
        Image::new(w, h, 1, pixels).expect("buffer matches dimensions")
    }
}

impl FrameSource for SyntheticVideo {
    fn video_id(&self) -> &str {
        &self.video_id
    }

    fn frame_count(&self) -> u32 {
        self.cfg.frames_per_video
    }

    fn dimensions(&self) -> (u32, u32) {
        (self.cfg.width, self.cfg.height)
    }

    fn frame(&self, index: u32) -> Result<Image> {
        if index == 0 || index > self.cfg.frames_per_video {
            return Err(Error::Dataset(format!(
                "{}: frame {index} outside 1..={}",
                self.video_id, self.cfg.frames_per_video
            )));
        }
        Ok(self.render(index))
    }
}

pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";

pub fn frame_file_name(index: u32) -> String {
    format!("frame_{index:05}.png")
}

/// Writes every frame, a ground-truth file per video and `manifest.json` under `out`.
pub fn synth_generate(cfg: &SyntheticConfig, out: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    let videos = SyntheticVideo::suite(cfg)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let entries = videos
        .par_iter()
        .map(|v| -> Result<VideoEntry> {
            let dir = out.join(&v.video_id);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for f in 1..=cfg.frames_per_video {
                save_png(&v.render(f), &dir.join(frame_file_name(f)))?;
            }
            let mut gt = String::new();
            for rec in v.ground_truth() {
                gt.push_str(&serde_json::to_string(&rec)?);
                gt.push('\n');
            }
            let gt_path = dir.join(GROUND_TRUTH_FILE);
            std::fs::write(&gt_path, gt).map_err(|e| Error::io(&gt_path, e))?;
            Ok(VideoEntry {
                video_id: v.video_id.clone(),
                frame_dir: v.video_id.clone().into(),
                frame_count: cfg.frames_per_video,
                fps: 30.0,
                width: cfg.width,
                height: cfg.height,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = DatasetManifest::new(entries);
    if manifest.videos.len() >= 3 {
        manifest = build_splits(&manifest, [0.6, 0.2, 0.2], cfg.seed)?;
    }
    manifest.save(&out.join(super::MANIFEST_FILE))?;
    Ok(manifest)
}
