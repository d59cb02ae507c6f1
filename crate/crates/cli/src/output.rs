use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Result directory with an overwrite guard.
pub struct OutputDir {
    root: PathBuf,
    force: bool,
}

impl OutputDir {
    pub fn new(root: &Path, force: bool) -> Self {
        Self {
            root: root.to_path_buf(),
            force,
        }
    }

    /// Fails with [`CliError::Overwrite`] if any of `names` exists and
    /// `--force` was not given.
    pub fn check<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Result<(), CliError> {
        if self.force {
            return Ok(());
        }
        match names
            .into_iter()
            .map(|n| self.root.join(n))
            .find(|p| p.exists())
        {
            Some(p) => Err(CliError::Overwrite(p)),
            None => Ok(()),
        }
    }

    /// Writes all files or none: every target is checked before the first
    /// write.
    pub fn write_all(&self, files: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
        self.check(files.iter().map(|(n, _)| *n))?;
        let paths: Vec<PathBuf> = files.iter().map(|(name, _)| self.root.join(name)).collect();
        fs::create_dir_all(&self.root)?;
        for (path, (_, body)) in paths.iter().zip(files) {
            fs::write(path, body)?;
        }
        Ok(paths)
    }
}
