pub mod cnn;
pub mod dataset;
pub mod detect;
pub mod error;
pub mod eval;
pub mod imaging;

pub use error::{Error, Result};

/// Crate version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
