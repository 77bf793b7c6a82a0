use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{sobel, to_grayscale, Circle, GradientField, Image};

/// Circle Hough transform parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoughConfig {
    pub r_min: u32,
    pub r_max: u32,
    /// Hysteresis thresholds on Sobel magnitude.
    pub edge_low: f32,
    pub edge_high: f32,
    pub accumulator_threshold: u32,
    pub nms_min_center_dist: f64,
    pub max_circles: usize,
}

impl Default for HoughConfig {
    fn default() -> Self {
        Self {
            r_min: 20,
            r_max: 80,
            edge_low: 100.0,
            edge_high: 160.0,
            accumulator_threshold: 18,
            nms_min_center_dist: 20.0,
            max_circles: 8,
        }
    }
}

impl HoughConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_min < 1 || self.r_min >= self.r_max {
            return Err(Error::Config(format!(
                "radius range must satisfy 1 <= r_min < r_max (got {}..{})",
                self.r_min, self.r_max
            )));
        }
        if !(self.edge_low >= 0.0 && self.edge_low <= self.edge_high) {
            return Err(Error::Config("edge_low must be in [0, edge_high]".into()));
        }
        if self.accumulator_threshold < 1 {
            return Err(Error::Config("accumulator_threshold must be at least 1".into()));
        }
        if !(self.nms_min_center_dist >= 0.0) {
            return Err(Error::Config("nms_min_center_dist must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleDetection {
    pub circle: Circle,
    pub votes: u32,
}

/// Edge mask: pixels at or above `high`, plus pixels at or above `low`
/// 8-connected to them.
pub fn hysteresis(grad: &GradientField, low: f32, high: f32) -> Vec<bool> {
    let (w, h) = (grad.width as usize, grad.height as usize);
    let mut mask = vec![false; w * h];
    let mut queue = VecDeque::new();
    for (i, &m) in grad.magnitude.iter().enumerate() {
        if m >= high {
            mask[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !mask[j] && grad.magnitude[j] >= low {
                    mask[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    mask
}

struct Edge {
    x: f32,
    y: f32,
    ux: f32,
    uy: f32,
}

/// One radius layer of the accumulator, cleared through its touched list.
struct Slice {
    votes: Vec<u16>,
    touched: Vec<u32>,
}

impl Slice {
    fn clear(&mut self) {
        for &i in &self.touched {
            self.votes[i as usize] = 0;
        }
        self.touched.clear();
    }
}

/// Detects circles in a grayscale image.
///
/// Votes are cast at +/- r along the gradient direction of every edge pixel;
/// local maxima of the (cx, cy, r) accumulator are thinned by center distance.
pub fn detect_circles(img: &Image, cfg: &HoughConfig) -> Result<Vec<CircleDetection>> {
    cfg.validate()?;
    let min = 2 * cfg.r_max + 1;
    if img.width() < min || img.height() < min {
        return Err(Error::TooSmall {
            width: img.width(),
            height: img.height(),
            min,
        });
    }
    let gray;
    let img = if img.is_grayscale() {
        img
    } else {
        gray = to_grayscale(img);
        &gray
    };
    let grad = sobel(img)?;
    let mask = hysteresis(&grad, cfg.edge_low, cfg.edge_high);
    let (w, h) = (img.width() as usize, img.height() as usize);
    let edges: Vec<Edge> = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .filter_map(|(i, _)| {
            let m = grad.magnitude[i];
            (m > 0.0).then(|| Edge {
                x: (i % w) as f32,
                y: (i / w) as f32,
                ux: grad.gx[i] / m,
                uy: grad.gy[i] / m,
            })
        })
        .collect();
    if edges.is_empty() {
        return Ok(Vec::new());
    }

    let radii: Vec<u32> = (cfg.r_min..=cfg.r_max).collect();
    let mut slots: Vec<Slice> = (0..3)
        .map(|_| Slice {
            votes: vec![0; w * h],
            touched: Vec::new(),
        })
        .collect();
    let mut candidates = Vec::new();
    let n = radii.len();
    for k in 0..=n {
        if k < n {
            let slot = &mut slots[k % 3];
            let r = radii[k] as f32;
            for e in &edges {
                for s in [-1.0f32, 1.0] {
                    let cx = (e.x + s * r * e.ux).round();
                    let cy = (e.y + s * r * e.uy).round();
                    if cx < 0.0 || cy < 0.0 || cx >= w as f32 || cy >= h as f32 {
                        continue;
                    }
                    let i = cy as usize * w + cx as usize;
                    if slot.votes[i] == 0 {
                        slot.touched.push(i as u32);
                    }
                    slot.votes[i] = slot.votes[i].saturating_add(1);
                }
            }
        }
        if k >= 1 {
            let j = k - 1;
            collect_maxima(&slots, j, n, w, h, radii[j], cfg.accumulator_threshold, &mut candidates);
        }
        if k >= 2 {
            slots[(k - 2) % 3].clear();
        }
    }

    candidates.sort_by(|a: &CircleDetection, b| {
        b.votes
            .cmp(&a.votes)
            .then((a.circle.cy, a.circle.cx, a.circle.r).cmp(&(b.circle.cy, b.circle.cx, b.circle.r)))
    });
    let mut kept: Vec<CircleDetection> = Vec::new();
    for c in candidates {
        if kept.len() == cfg.max_circles {
            break;
        }
        if kept
            .iter()
            .all(|k| k.circle.center_distance(&c.circle) >= cfg.nms_min_center_dist)
        {
            kept.push(c);
        }
    }
    Ok(kept)
}

#[allow(clippy::too_many_arguments)]
fn collect_maxima(
    slots: &[Slice],
    j: usize,
    n: usize,
    w: usize,
    h: usize,
    r: u32,
    threshold: u32,
    out: &mut Vec<CircleDetection>,
) {
    let layer = &slots[j % 3];
    let mut neighbors = vec![layer];
    if j > 0 {
        neighbors.push(&slots[(j - 1) % 3]);
    }
    if j + 1 < n {
        neighbors.push(&slots[(j + 1) % 3]);
    }
    for &i in &layer.touched {
        let i = i as usize;
        let v = layer.votes[i];
        if (v as u32) < threshold {
            continue;
        }
        let (x, y) = (i % w, i / w);
        let local_max = neighbors.iter().all(|s| {
            (y.saturating_sub(1)..=(y + 1).min(h - 1)).all(|ny| {
                (x.saturating_sub(1)..=(x + 1).min(w - 1)).all(|nx| s.votes[ny * w + nx] <= v)
            })
        });
        if local_max {
            out.push(CircleDetection {
                circle: Circle {
                    cx: x as i32,
                    cy: y as i32,
                    r: r as i32,
                },
                votes: v as u32,
            });
        }
    }
}
