use rand::Rng;

use crate::error::{Error, Result};
use crate::imaging::{crop, resize, to_grayscale, BoundingBox, Image, ResizeMode};

/// Square crop of side `out_size` at a uniformly random top-left corner.
pub fn random_crop(img: &Image, out_size: u32, rng: &mut impl Rng) -> Result<Image> {
    let (w, h) = img.dimensions();
    if out_size == 0 || out_size > w.min(h) {
        return Err(Error::InvalidCrop {
            size: out_size,
            width: w,
            height: h,
        });
    }
    let x = rng.random_range(0..=w - out_size) as i32;
    let y = rng.random_range(0..=h - out_size) as i32;
    crop(img, &BoundingBox::new(x, y, x + out_size as i32, y + out_size as i32)?)
}

/// Grayscale, resize to `size x size` and scale to `[0, 1]` for network input.
pub fn to_input(img: &Image, size: u32) -> Vec<f32> {
    let gray = to_grayscale(img);
    let r = resize(&gray, size, size, ResizeMode::Bilinear).expect("positive size");
    r.pixels().iter().map(|&p| p as f32 / 255.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_size_crop_is_identity() {
        let img = Image::from_fn(12, 12, |x, y| (x * 12 + y) as u8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(random_crop(&img, 12, &mut rng).unwrap(), img);
    }

    #[test]
    fn offsets_stay_in_range() {
        let img = Image::from_fn(100, 100, |x, y| (x ^ y) as u8);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c = random_crop(&img, 64, &mut rng).unwrap();
            assert_eq!(c.dimensions(), (64, 64));
            // Value at the crop origin encodes its position.
            let v = c.get(0, 0, 0);
            let found = (0..=36u32)
                .flat_map(|y| (0..=36u32).map(move |x| (x, y)))
                .any(|(x, y)| (x ^ y) as u8 == v);
            assert!(found);
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let img = Image::from_fn(40, 30, |x, y| (x * 3 + y * 5) as u8);
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            assert_eq!(
                random_crop(&img, 20, &mut a).unwrap(),
                random_crop(&img, 20, &mut b).unwrap()
            );
        }
    }

    #[test]
    fn oversized_crop_is_rejected() {
        let img = Image::filled(10, 20, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            random_crop(&img, 11, &mut rng),
            Err(Error::InvalidCrop { .. })
        ));
    }
}
