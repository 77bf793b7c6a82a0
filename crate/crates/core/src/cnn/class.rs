use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Xylem surface state at the cut stem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WetnessClass {
    Dry = 0,
    Wet = 1,
    Bubble = 2,
}

impl WetnessClass {
    pub const ALL: [WetnessClass; 3] = [WetnessClass::Dry, WetnessClass::Wet, WetnessClass::Bubble];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WetnessClass::Dry => "dry",
            WetnessClass::Wet => "wet",
            WetnessClass::Bubble => "bubble",
        }
    }

    /// Index of the largest probability; ties go to the lower class code.
    pub fn argmax(probs: &[f32]) -> WetnessClass {
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate().take(3) {
            if p > probs[best] {
                best = i;
            }
        }
        Self::ALL[best]
    }
}

impl fmt::Display for WetnessClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WetnessClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "dry" => Ok(WetnessClass::Dry),
            "wet" => Ok(WetnessClass::Wet),
            "bubble" => Ok(WetnessClass::Bubble),
            other => Err(Error::Config(format!("unknown wetness class {other:?}"))),
        }
    }
}
