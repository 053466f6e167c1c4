//! Staged output: files are assembled in memory, written under temporary
//! names and renamed into place only when every write succeeded.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::CommandName;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Default)]
pub struct Staging {
    files: Vec<(String, Vec<u8>)>,
}

impl Staging {
    pub fn new() -> Self {
        Self::default()
    }

    /// `name` is relative to the output directory and may contain `/`.
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_with(&mut self, name: impl Into<String>, f: impl FnOnce(&mut Vec<u8>) -> buqo::Result<()>) -> buqo::Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    /// `sha256  name` lines in name order, preceded by the seed and command.
    pub fn manifest(&self, command: CommandName, seed: u64) -> String {
        let mut entries: Vec<(&str, String)> = self
            .files
            .iter()
            .map(|(n, b)| (n.as_str(), hex::encode(Sha256::digest(b))))
            .collect();
        entries.sort();
        let mut out = format!("# command {}\n# seed {seed}\n", command_str(command));
        for (name, hash) in entries {
            out.push_str(&format!("{hash}  {name}\n"));
        }
        out
    }

    /// Writes every file plus the manifest into `dir`, creating it if needed.
    pub fn commit(mut self, dir: &Path, command: CommandName, seed: u64) -> std::io::Result<Vec<PathBuf>> {
        let manifest = self.manifest(command, seed);
        self.add(MANIFEST, manifest.into_bytes());
        fs::create_dir_all(dir)?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let result = (|| {
            for (name, bytes) in &self.files {
                let target = dir.join(name);
                if let Some(parent) = target.parent() {
                    fs::create_dir_all(parent)?;
                }
                let mut tmp = target.clone().into_os_string();
                tmp.push(".partial");
                let tmp = PathBuf::from(tmp);
                fs::write(&tmp, bytes)?;
                staged.push((tmp, target));
            }
            Ok(())
        })();
        if let Err(e) = result {
            for (tmp, _) in &staged {
                let _ = fs::remove_file(tmp);
            }
            return Err(e);
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, target) in staged {
            fs::rename(&tmp, &target)?;
            written.push(target);
        }
        Ok(written)
    }
}

pub fn command_str(c: CommandName) -> &'static str {
    match c {
        CommandName::Simulate => "simulate",
        CommandName::Map => "map",
        CommandName::Test => "test",
        CommandName::Grid => "grid",
        CommandName::Report => "report",
    }
}
