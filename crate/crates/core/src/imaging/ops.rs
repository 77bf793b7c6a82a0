use serde::{Deserialize, Serialize};

use super::{BoundingBox, Image};
use crate::error::{Error, Result};

/// BT.601 luma with round-half-up. Grayscale input is returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.is_grayscale() {
        return img.clone();
    }
    let pixels = img
        .pixels()
        .chunks_exact(3)
        .map(|p| {
            // Integer weights keep the rounding exact.
            let v = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
            ((v + 500) / 1000).min(255) as u8
        })
        .collect();
    Image::new(img.width(), img.height(), 1, pixels).expect("same dimensions")
}

/// Copies the part of `img` covered by `bbox`, after clamping `bbox` to the
/// image bounds.
pub fn crop(img: &Image, bbox: &BoundingBox) -> Result<Image> {
    let b = bbox.clamp_to(img.width(), img.height())?;
    let ch = img.channels() as usize;
    let src_stride = img.width() as usize * ch;
    let row_len = b.width() as usize * ch;
    let mut pixels = Vec::with_capacity(row_len * b.height() as usize);
    for y in b.y_min..b.y_max {
        let start = y as usize * src_stride + b.x_min as usize * ch;
        pixels.extend_from_slice(&img.pixels()[start..start + row_len]);
    }
    Image::new(b.width() as u32, b.height() as u32, img.channels(), pixels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeMode {
    #[default]
    Bilinear,
    Nearest,
}

/// Resamples to exactly `width x height` using half-pixel center alignment.
pub fn resize(img: &Image, width: u32, height: u32, mode: ResizeMode) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!(
            "resize target must be positive, got {width}x{height}"
        )));
    }
    if img.dimensions() == (width, height) {
        return Ok(img.clone());
    }
    let (sw, sh) = img.dimensions();
    let ch = img.channels();
    let sx = sw as f64 / width as f64;
    let sy = sh as f64 / height as f64;
    let mut out = Vec::with_capacity(width as usize * height as usize * ch as usize);
    match mode {
        ResizeMode::Nearest => {
            for y in 0..height {
                let src_y = (((y as f64 + 0.5) * sy) as u32).min(sh - 1);
                for x in 0..width {
                    let src_x = (((x as f64 + 0.5) * sx) as u32).min(sw - 1);
                    for c in 0..ch {
                        out.push(img.get(src_x, src_y, c));
                    }
                }
            }
        }
        ResizeMode::Bilinear => {
            let taps = |dst: u32, scale: f64, src_len: u32| {
                let pos = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
                let lo = pos.floor() as u32;
                let hi = (lo + 1).min(src_len - 1);
                (lo, hi, pos - lo as f64)
            };
            let xs: Vec<_> = (0..width).map(|x| taps(x, sx, sw)).collect();
            for y in 0..height {
                let (y0, y1, fy) = taps(y, sy, sh);
                for &(x0, x1, fx) in &xs {
                    for c in 0..ch {
                        let top = img.get(x0, y0, c) as f64 * (1.0 - fx) + img.get(x1, y0, c) as f64 * fx;
                        let bottom =
                            img.get(x0, y1, c) as f64 * (1.0 - fx) + img.get(x1, y1, c) as f64 * fx;
                        let v = top * (1.0 - fy) + bottom * fy;
                        out.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
                    }
                }
            }
        }
    }
    Image::new(width, height, ch, out)
}
