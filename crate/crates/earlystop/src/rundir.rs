//! Run-directory conventions: every command materializes its
//! configuration, seed and tool version next to its outputs, so a run can
//! be reproduced from the directory alone.

use crate::config::RunConfig;
use crate::error::CliResult;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct RunMeta<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    config_hash: &'a str,
}

pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn create(path: &Path, config: &RunConfig) -> CliResult<RunDir> {
        std::fs::create_dir_all(path)?;
        std::fs::write(path.join("config.json"), config.to_json())?;
        let hash = config.hash();
        let meta = RunMeta {
            tool: "earlystop",
            version: env!("CARGO_PKG_VERSION"),
            seed: config.seed,
            config_hash: &hash,
        };
        std::fs::write(
            path.join("meta.json"),
            serde_json::to_string_pretty(&meta).expect("meta serializes"),
        )?;
        Ok(RunDir { path: path.to_path_buf() })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> CliResult<()> {
        std::fs::write(self.file(name), contents)?;
        Ok(())
    }
}

/// Cache directory: EARLYSTOP_CACHE_DIR overrides the per-run default.
pub fn cache_dir(out_dir: &Path) -> PathBuf {
    match std::env::var_os("EARLYSTOP_CACHE_DIR") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => out_dir.join("cache"),
    }
}
