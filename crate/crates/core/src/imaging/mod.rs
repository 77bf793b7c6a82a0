//! Raster images, pixel-space geometry, and the filters the rest of the
//! pipeline is built on.

mod codec;
mod geometry;
mod gradient;
mod ops;

pub use codec::{decode_image, decode_png, encode_png, image_dimensions, load_gray, load_image, save_png};
pub use geometry::{BoundingBox, Circle};
pub use gradient::{sobel, GradientField};
pub use ops::{crop, resize, to_grayscale, ResizeMode};

use crate::error::{Error, Result};

/// An 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn new(width: u32, height: u32, channels: u8, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "unsupported channel count {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if pixels.len() != expected {
            return Err(Error::InvalidImage(format!(
                "buffer holds {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// A grayscale image with every pixel set to `value`.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            channels: 1,
            pixels: vec![value; width as usize * height as usize],
        }
    }

    /// Builds a grayscale image from a per-pixel function of (x, y).
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            channels: 1,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn is_grayscale(&self) -> bool {
        self.channels == 1
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u8) -> u8 {
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize
            + c as usize;
        self.pixels[idx]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: u8, value: u8) {
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize
            + c as usize;
        self.pixels[idx] = value;
    }

    /// The full-frame box `[0, width) x [0, height)`.
    pub fn bounds(&self) -> BoundingBox {
        BoundingBox::new(0, 0, self.width as i32, self.height as i32)
            .expect("image dimensions are positive")
    }

    /// Mean intensity over the pixels for which `mask(x, y)` holds. Uses the
    /// first channel only.
    pub fn masked_mean(&self, mut mask: impl FnMut(u32, u32) -> bool) -> Option<f64> {
        let mut sum = 0u64;
        let mut n = 0u64;
        for y in 0..self.height {
            for x in 0..self.width {
                if mask(x, y) {
                    sum += self.get(x, y, 0) as u64;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum as f64 / n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_length_is_checked() {
        assert!(Image::new(2, 2, 1, vec![0; 4]).is_ok());
        assert!(Image::new(2, 2, 3, vec![0; 4]).is_err());
        assert!(Image::new(0, 2, 1, vec![]).is_err());
        assert!(Image::new(2, 2, 2, vec![0; 8]).is_err());
    }

    #[test]
    fn accessors_index_row_major() {
        let img = Image::from_fn(3, 2, |x, y| (y * 3 + x) as u8);
        assert_eq!(img.get(2, 1, 0), 5);
        assert_eq!(img.pixels(), &[0, 1, 2, 3, 4, 5]);
        assert_eq!(img.bounds(), BoundingBox::new(0, 0, 3, 2).unwrap());
    }
}
