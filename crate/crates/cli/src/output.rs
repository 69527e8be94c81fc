//! CSV files that start with a `# scenario_hash=.. seed=..` line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::scenario::LoadedScenario;

/// SHA-256 over the scenario text, every file it references and the run
/// count, as 16 hex digits.
pub fn scenario_hash(loaded: &LoadedScenario, runs: usize) -> Result<String> {
    let mut h = Sha256::new();
    h.update(loaded.text.as_bytes());
    for p in loaded.referenced_files() {
        let bytes = fs::read(&p).map_err(|e| CliError::io(&p, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    h.update((runs as u64).to_le_bytes());
    let digest = h.finalize();
    let mut hex = String::with_capacity(16);
    for b in &digest[..8] {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(hex)
}

pub struct Output {
    dir: PathBuf,
    comment: String,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, scenario_hash: &str, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            comment: format!("# scenario_hash={scenario_hash} seed={seed}\n"),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }

    pub fn write<S: AsRef<str>>(&mut self, name: &str, header: &[&str], rows: &[Vec<S>]) -> Result<PathBuf> {
        let mut body = header.join(",");
        body.push('\n');
        for r in rows {
            for (i, cell) in r.iter().enumerate() {
                if i > 0 {
                    body.push(',');
                }
                body.push_str(cell.as_ref());
            }
            body.push('\n');
        }
        self.write_raw(name, body.as_bytes())
    }

    /// `body` must already start with its header row.
    pub fn write_raw(&mut self, name: &str, body: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut bytes = Vec::with_capacity(self.comment.len() + body.len());
        bytes.extend_from_slice(self.comment.as_bytes());
        bytes.extend_from_slice(body);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comment_then_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = Output::new(dir.path(), "abc", 9).unwrap();
        let p = o.write("x.csv", &["a", "b"], &[vec!["1".to_string(), "2".to_string()]]).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "# scenario_hash=abc seed=9\na,b\n1,2\n");
    }

    #[test]
    fn hash_tracks_text_and_runs() {
        let a = LoadedScenario::bundled();
        let mut b = a.clone();
        b.text.push(' ');
        let h = scenario_hash(&a, 10).unwrap();
        assert_eq!(h.len(), 16);
        assert_eq!(h, scenario_hash(&a, 10).unwrap());
        assert_ne!(h, scenario_hash(&a, 11).unwrap());
        assert_ne!(h, scenario_hash(&b, 10).unwrap());
    }
}
