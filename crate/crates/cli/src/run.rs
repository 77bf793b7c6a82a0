use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Output directory of one invocation, named `<UTC timestamp>-seed<seed>`.
pub struct RunDir {
    path: PathBuf,
}

#[derive(Serialize)]
struct Record<'a, C: Serialize> {
    command: &'a str,
    seed: u64,
    args: Vec<String>,
    config: &'a C,
    versions: Versions,
}

#[derive(Serialize)]
struct Versions {
    swp_core: &'static str,
    swp_cli: &'static str,
}

impl RunDir {
    pub fn create(out: &Path, seed: u64) -> Result<Self> {
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
        let base = format!("{stamp}-seed{seed}");
        let mut path = out.join(&base);
        let mut n = 1;
        while path.exists() {
            n += 1;
            path = out.join(format!("{base}-{n}"));
        }
        std::fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.file(name);
        std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s)
    }

    /// Writes `run.json`: command, seed, arguments, full configuration and crate versions.
    pub fn record(&self, command: &str, seed: u64, config: &impl Serialize) -> Result<()> {
        let rec = Record {
            command,
            seed,
            args: std::env::args().skip(1).collect(),
            config,
            versions: Versions {
                swp_core: swp_core::VERSION,
                swp_cli: env!("CARGO_PKG_VERSION"),
            },
        };
        self.write_json("run.json", &rec).map(|_| ())
    }
}
