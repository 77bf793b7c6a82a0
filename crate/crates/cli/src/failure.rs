use std::fmt;

use swp_core::Error;

/// Failure classes with dedicated exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    NoDetection(String),
    Numerical(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::NoDetection(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NO_DETECTION: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// 2 for configuration and input errors, 3 when no stem was found, 4 for
/// numerical failures, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Config(_) => EXIT_CONFIG,
                Failure::NoDetection(_) => EXIT_NO_DETECTION,
                Failure::Numerical(_) => EXIT_NUMERICAL,
            };
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::NoStemDetected { .. } | Error::NoDetections => EXIT_NO_DETECTION,
                Error::Numerical { .. } => EXIT_NUMERICAL,
                Error::Config(_)
                | Error::Dataset(_)
                | Error::Gap { .. }
                | Error::Dimension { .. }
                | Error::Split(_)
                | Error::Balance { .. }
                | Error::Coverage(_)
                | Error::MissingGroundTruth(_)
                | Error::DuplicateName(_)
                | Error::Io { .. }
                | Error::Json(_)
                | Error::Decode { .. } => EXIT_CONFIG,
                _ => 1,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if matches!(
                io.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::AddrInUse | std::io::ErrorKind::PermissionDenied
            ) {
                return EXIT_CONFIG;
            }
        }
    }
    1
}
