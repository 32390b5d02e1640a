//! Hashed input reads and atomic output writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

/// Files read during a run with their SHA-256 digests.
#[derive(Debug, Default)]
pub struct Inputs {
    pub hashes: BTreeMap<String, String>,
}

impl Inputs {
    /// Read `path` as UTF-8 and record its digest under its absolute path.
    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        self.hashes
            .insert(absolute(path).display().to_string(), sha256(&bytes));
        String::from_utf8(bytes)
            .map_err(|_| CliError::input(format!("{}: not valid UTF-8", path.display())))
    }
}

pub fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn absolute(path: &Path) -> PathBuf {
    fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}

/// Writes files into one output directory, each via a temporary file renamed
/// into place, and remembers their names in write order.
pub struct OutDir {
    dir: PathBuf,
    pub written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let fail = |e: std::io::Error| CliError::input(format!("{}: {e}", self.dir.join(name).display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(fail)?;
        tmp.write_all(contents.as_bytes()).map_err(fail)?;
        tmp.persist(self.dir.join(name)).map_err(|e| fail(e.error))?;
        self.written.push(name.to_string());
        Ok(())
    }
}
