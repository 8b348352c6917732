use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run an experiment and check its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// Hash of the config with `output_dir` cleared.
    pub config_sha256: String,
    /// Relative path (forward slashes) to the SHA-256 of the file.
    pub outputs: BTreeMap<String, String>,
}

/// A file whose hash differs between two runs, or exists in only one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub path: String,
    pub expected: Option<String>,
    pub found: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn config_hash(config: &RunConfig) -> String {
    let canonical = RunConfig {
        output_dir: None,
        ..config.clone()
    };
    sha256_hex(canonical.to_json().as_bytes())
}

/// Hashes of every file below `root` except the manifest itself.
pub fn hash_tree(root: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path == root.join(MANIFEST_FILE) {
            continue;
        }
        let rel = path
            .strip_prefix(root)
            .expect("walked below root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        out.insert(rel, sha256_file(path)?);
    }
    Ok(out)
}

impl Manifest {
    pub fn collect(root: &Path, config: &RunConfig) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            config_sha256: config_hash(config),
            outputs: hash_tree(root)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Self = serde_json::from_str(&text)?;
        if manifest.config_sha256 != config_hash(&manifest.config) {
            return Err(Error::Format {
                kind: "manifest",
                reason: "config hash does not match the embedded config".into(),
            });
        }
        Ok(manifest)
    }

    /// Files under `root` that differ from the recorded hashes.
    pub fn verify(&self, root: &Path) -> Result<Vec<Mismatch>> {
        let found = hash_tree(root)?;
        let mut paths: Vec<&String> = self.outputs.keys().chain(found.keys()).collect();
        paths.sort();
        paths.dedup();
        Ok(paths
            .into_iter()
            .filter_map(|p| {
                let (e, f) = (self.outputs.get(p), found.get(p));
                (e != f).then(|| Mismatch {
                    path: p.clone(),
                    expected: e.cloned(),
                    found: f.cloned(),
                })
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Scale;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn detects_changed_missing_and_extra_files() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        fs::create_dir_all(root.join("a")).unwrap();
        fs::write(root.join("a/x.txt"), "one").unwrap();
        fs::write(root.join("y.txt"), "two").unwrap();
        let config = RunConfig::preset(Scale::Smoke);
        let m = Manifest::collect(root, &config).unwrap();
        m.save(root.join(MANIFEST_FILE)).unwrap();
        assert_eq!(m.outputs.len(), 2);
        assert!(m.outputs.contains_key("a/x.txt"));
        assert!(m.verify(root).unwrap().is_empty());
        assert_eq!(Manifest::load(root.join(MANIFEST_FILE)).unwrap(), m);

        fs::write(root.join("a/x.txt"), "changed").unwrap();
        fs::remove_file(root.join("y.txt")).unwrap();
        fs::write(root.join("z.txt"), "new").unwrap();
        let bad: Vec<String> = m.verify(root).unwrap().into_iter().map(|x| x.path).collect();
        assert_eq!(bad, vec!["a/x.txt", "y.txt", "z.txt"]);
    }

    #[test]
    fn output_dir_does_not_change_identity() {
        let a = RunConfig::preset(Scale::Smoke);
        let b = RunConfig {
            output_dir: Some("elsewhere".into()),
            ..a.clone()
        };
        assert_eq!(config_hash(&a), config_hash(&b));
        let c = RunConfig { steps: a.steps + 1, ..a.clone() };
        assert_ne!(config_hash(&a), config_hash(&c));
    }
}
