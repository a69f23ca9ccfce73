//! Output directory handling: created if absent, never overwritten without
//! an explicit force flag.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub struct OutputDir {
    dir: PathBuf,
    force: bool,
}

impl OutputDir {
    pub fn prepare(dir: &Path, force: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), force })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if path.exists() && !self.force {
            return Err(CliError::Usage(format!(
                "refusing to overwrite {}; pass --force to allow it",
                path.display()
            )));
        }
        fs::write(&path, contents)?;
        Ok(path)
    }
}
