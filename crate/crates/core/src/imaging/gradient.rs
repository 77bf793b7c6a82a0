use super::Image;
use crate::error::{Error, Result};

/// Per-pixel image derivatives, row-major, same dimensions as the source.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: u32,
    pub height: u32,
    pub gx: Vec<f32>,
    pub gy: Vec<f32>,
    pub magnitude: Vec<f32>,
}

impl GradientField {
    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }
}

/// 3x3 Sobel derivatives with edge-replicated borders. Uses the first channel.
pub fn sobel(img: &Image) -> Result<GradientField> {
    let (w, h) = img.dimensions();
    if w < 3 || h < 3 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let n = w as usize * h as usize;
    let mut gx = vec![0f32; n];
    let mut gy = vec![0f32; n];
    let mut magnitude = vec![0f32; n];
    let at = |x: i64, y: i64| -> f32 {
        let x = x.clamp(0, w as i64 - 1) as u32;
        let y = y.clamp(0, h as i64 - 1) as u32;
        img.get(x, y, 0) as f32
    };
    let interior = |x: u32, y: u32| x > 0 && y > 0 && x + 1 < w && y + 1 < h;
    let px = img.pixels();
    let ch = img.channels() as usize;
    let stride = w as usize * ch;
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = if interior(x, y) {
                let c = y as usize * stride + x as usize * ch;
                let p = |off: isize| px[(c as isize + off) as usize] as f32;
                let (s, c1) = (stride as isize, ch as isize);
                let tl = p(-s - c1);
                let t = p(-s);
                let tr = p(-s + c1);
                let l = p(-c1);
                let r = p(c1);
                let bl = p(s - c1);
                let b = p(s);
                let br = p(s + c1);
                (
                    (tr + 2.0 * r + br) - (tl + 2.0 * l + bl),
                    (bl + 2.0 * b + br) - (tl + 2.0 * t + tr),
                )
            } else {
                let (xi, yi) = (x as i64, y as i64);
                (
                    (at(xi + 1, yi - 1) + 2.0 * at(xi + 1, yi) + at(xi + 1, yi + 1))
                        - (at(xi - 1, yi - 1) + 2.0 * at(xi - 1, yi) + at(xi - 1, yi + 1)),
                    (at(xi - 1, yi + 1) + 2.0 * at(xi, yi + 1) + at(xi + 1, yi + 1))
                        - (at(xi - 1, yi - 1) + 2.0 * at(xi, yi - 1) + at(xi + 1, yi - 1)),
                )
            };
            let i = y as usize * w as usize + x as usize;
            gx[i] = dx;
            gy[i] = dy;
            magnitude[i] = (dx * dx + dy * dy).sqrt();
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
    })
}
