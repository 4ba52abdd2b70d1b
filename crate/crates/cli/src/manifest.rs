//! Run manifests: one `key=value` record per run.
//!
//! ```text
//! subcommand=train
//! flag.lr=0.01            every resolved flag, defaults included
//! seed=0
//! input.0.path=syn.hg     inputs with their SHA-256 digests
//! input.0.sha256=…
//! output.metrics=m.csv    artifacts and their digests
//! digest.metrics=…
//! result.test_acc=0.952   numbers the run reported
//! status=ok
//! duration_ms=812
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

impl Manifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        self.entries.push((key.into(), value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| format!("bad manifest line `{line}`"))?;
            if entries.iter().any(|(seen, _)| seen == k) {
                return Err(format!("manifest key `{k}` appears twice"));
            }
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(Manifest { entries })
    }

    /// `(long flag, value)` pairs recorded by the run.
    pub fn flags(&self) -> Vec<(String, String)> {
        self.entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("flag.").map(|f| (f.to_string(), v.clone())))
            .collect()
    }

    /// Recorded input paths and digests.
    pub fn inputs(&self) -> Vec<(PathBuf, String)> {
        let mut out = Vec::new();
        for i in 0.. {
            let (Some(p), Some(d)) = (self.get(&format!("input.{i}.path")), self.get(&format!("input.{i}.sha256"))) else {
                break;
            };
            out.push((PathBuf::from(p), d.to_string()));
        }
        out
    }

    /// Entries that a faithful replay must reproduce exactly.
    pub fn reproducible(&self) -> Vec<(String, String)> {
        self.entries
            .iter()
            .filter(|(k, _)| k.starts_with("result.") || k.starts_with("digest.") || k == "status")
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = Manifest::default();
        m.push("subcommand", "train");
        m.push("flag.lr", 0.01);
        m.push("input.0.path", "a b.hg");
        m.push("input.0.sha256", "00ff");
        m.push("result.test_acc", 0.5);
        let back = Manifest::parse(&m.render()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.flags(), vec![("lr".to_string(), "0.01".to_string())]);
        assert_eq!(back.inputs(), vec![(PathBuf::from("a b.hg"), "00ff".to_string())]);
        assert_eq!(back.reproducible().len(), 1);
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
