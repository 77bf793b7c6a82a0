use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cnn::WetnessClass;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameRef {
    pub video_id: String,
    pub frame: u32,
}

impl FrameRef {
    pub fn new(video_id: impl Into<String>, frame: u32) -> Self {
        Self {
            video_id: video_id.into(),
            frame,
        }
    }
}

/// Draws `total / 3` frames of each class without replacement.
///
/// The result is ordered by class, then by frame reference.
pub fn balanced_sample(
    labeled: &[(FrameRef, WetnessClass)],
    total: usize,
    seed: u64,
) -> Result<Vec<(FrameRef, WetnessClass)>> {
    if total % 3 != 0 {
        return Err(Error::Config(format!("{total} frames cannot be split evenly over 3 classes")));
    }
    let per_class = total / 3;
    let mut pools: [Vec<&FrameRef>; 3] = Default::default();
    for (f, c) in labeled {
        pools[c.code()].push(f);
    }
    let counts = [pools[0].len(), pools[1].len(), pools[2].len()];
    if counts.iter().any(|&n| n < per_class) {
        return Err(Error::Balance {
            needed: per_class,
            counts,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(total);
    for (code, pool) in pools.iter_mut().enumerate() {
        pool.sort_unstable();
        let mut picked: Vec<&FrameRef> = sample(&mut rng, pool.len(), per_class)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        picked.sort_unstable();
        let class = WetnessClass::from_code(code).expect("three classes");
        out.extend(picked.into_iter().map(|f| (f.clone(), class)));
    }
    Ok(out)
}
