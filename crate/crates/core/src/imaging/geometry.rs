use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in pixel coordinates, half-open: `[x_min, x_max) x [y_min, y_max)`.
///
/// Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i32; 4]", into = "[i32; 4]")]
pub struct BoundingBox {
    pub x_min: i32,
    pub y_min: i32,
    pub x_max: i32,
    pub y_max: i32,
}

impl BoundingBox {
    pub fn new(x_min: i32, y_min: i32, x_max: i32, y_max: i32) -> Result<Self> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        if x_min < x_max && y_min < y_max {
            Ok(b)
        } else {
            Err(Error::InvalidBox(b))
        }
    }

    pub fn width(&self) -> i32 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> i32 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> i64 {
        self.width() as i64 * self.height() as i64
    }

    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max
    }

    /// Area shared with `other`; 0 when disjoint.
    pub fn intersection_area(&self, other: &BoundingBox) -> i64 {
        let w = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0);
        let h = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0);
        w as i64 * h as i64
    }

    /// Clamps the box to `[0, width) x [0, height)`.
    pub fn clamp_to(&self, width: u32, height: u32) -> Result<BoundingBox> {
        let w = width as i32;
        let h = height as i32;
        BoundingBox::new(
            self.x_min.clamp(0, w),
            self.y_min.clamp(0, h),
            self.x_max.clamp(0, w),
            self.y_max.clamp(0, h),
        )
        .map_err(|_| Error::InvalidBox(*self))
    }

    /// Whether `other` lies entirely inside this box.
    pub fn encloses(&self, other: &BoundingBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    pub fn to_array(&self) -> [i32; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

impl TryFrom<[i32; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(v: [i32; 4]) -> Result<Self> {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [i32; 4] {
    fn from(b: BoundingBox) -> Self {
        b.to_array()
    }
}

/// Circle with integer center and radius. Serialized as `[cx, cy, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[i32; 3]", into = "[i32; 3]")]
pub struct Circle {
    pub cx: i32,
    pub cy: i32,
    pub r: i32,
}

impl Circle {
    pub fn new(cx: i32, cy: i32, r: i32) -> Result<Self> {
        if r >= 1 {
            Ok(Self { cx, cy, r })
        } else {
            Err(Error::Config(format!("circle radius must be >= 1, got {r}")))
        }
    }

    /// Rounds a real-valued circle to the nearest pixel.
    pub fn rounded(cx: f64, cy: f64, r: f64) -> Result<Self> {
        Circle::new(cx.round() as i32, cy.round() as i32, r.round() as i32)
    }

    pub fn center_distance(&self, other: &Circle) -> f64 {
        let dx = (self.cx - other.cx) as f64;
        let dy = (self.cy - other.cy) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

impl TryFrom<[i32; 3]> for Circle {
    type Error = Error;

    fn try_from(v: [i32; 3]) -> Result<Self> {
        Circle::new(v[0], v[1], v[2])
    }
}

impl From<Circle> for [i32; 3] {
    fn from(c: Circle) -> Self {
        [c.cx, c.cy, c.r]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_boxes_are_rejected() {
        assert!(BoundingBox::new(0, 0, 0, 5).is_err());
        assert!(BoundingBox::new(3, 0, 2, 5).is_err());
        assert_eq!(BoundingBox::new(0, 0, 3, 4).unwrap().area(), 12);
    }

    #[test]
    fn clamping() {
        let b = BoundingBox::new(-5, -5, 5, 5).unwrap();
        assert_eq!(b.clamp_to(10, 10).unwrap(), BoundingBox::new(0, 0, 5, 5).unwrap());
        let outside = BoundingBox::new(20, 20, 30, 30).unwrap();
        assert!(outside.clamp_to(10, 10).is_err());
    }

    #[test]
    fn serde_uses_arrays() {
        let b = BoundingBox::new(50, 50, 150, 150).unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), "[50,50,150,150]");
        let c: Circle = serde_json::from_str("[1,2,3]").unwrap();
        assert_eq!(c, Circle::new(1, 2, 3).unwrap());
        assert!(serde_json::from_str::<BoundingBox>("[5,5,1,1]").is_err());
        assert!(serde_json::from_str::<Circle>("[5,5,0]").is_err());
    }
}
