//! Output directory bookkeeping: every written file is hashed into `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_sha256: String,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Writes files into one directory and remembers their checksums.
pub struct OutputDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl OutputDir {
    pub fn create(root: &Path, experiment: &str, normalized_config: &str) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            manifest: RunManifest {
                experiment: experiment.to_string(),
                config_sha256: sha256_hex(normalized_config.as_bytes()),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                started_unix: now(),
                finished_unix: 0,
                files: Vec::new(),
            },
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(self.root.join(name), bytes)?;
        self.manifest.files.retain(|f| f.name != name);
        self.manifest.files.push(FileEntry { name: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(mut self) -> std::io::Result<RunManifest> {
        self.manifest.finished_unix = now();
        let text = serde_json::to_string_pretty(&self.manifest).map_err(std::io::Error::other)?;
        fs::write(self.root.join("manifest.json"), text + "\n")?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_file_with_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("nested/out");
        let mut out = OutputDir::create(&root, "simulate", "seed = 1\n").unwrap();
        out.write("a.csv", b"t,x\n0,1\n").unwrap();
        out.write("b.json", b"{}").unwrap();
        out.write("a.csv", b"t,x\n0,2\n").unwrap();
        let m = out.finish().unwrap();
        assert_eq!(m.files.len(), 2);
        for f in &m.files {
            let bytes = fs::read(root.join(&f.name)).unwrap();
            assert_eq!(sha256_hex(&bytes), f.sha256);
        }
        assert!(root.join("manifest.json").exists());
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
