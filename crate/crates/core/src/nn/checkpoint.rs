//! Named-tensor container used for model checkpoints, representation sets
//! and cluster models.
//!
//! Layout (little-endian): magic `SMTENSOR`, version u32, kind string, meta
//! string, tensor count u32, then per tensor: name string, rank u32, dims
//! u64 each, values f64. Strings are a u32 byte length followed by UTF-8.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::tensor::Tensor;
use crate::binio::{Decoder, Encoder};
use crate::error::{Error, Result};

pub const TENSOR_FILE_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"SMTENSOR";

#[derive(Clone, Debug, PartialEq)]
pub struct TensorFile {
    /// What the file holds, e.g. `checkpoint`.
    pub kind: String,
    /// Free-form JSON describing the contents (architecture, provenance).
    pub meta: String,
    pub tensors: Vec<(String, Tensor)>,
}

impl TensorFile {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name).ok_or_else(|| Error::Format {
            kind: "tensor",
            reason: format!("missing tensor `{name}` in {} file", self.kind),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc = Encoder::new(BufWriter::new(file));
        let mut write = || -> std::io::Result<()> {
            enc.bytes(MAGIC)?;
            enc.u32(TENSOR_FILE_VERSION)?;
            enc.str(&self.kind)?;
            enc.str(&self.meta)?;
            enc.u32(self.tensors.len() as u32)?;
            for (name, t) in &self.tensors {
                enc.str(name)?;
                enc.u32(t.shape().len() as u32)?;
                for &d in t.shape() {
                    enc.u64(d as u64)?;
                }
                for &v in t.values() {
                    enc.f64(v)?;
                }
            }
            Ok(())
        };
        write().map_err(|e| Error::io(path, e))?;
        enc.finish().flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut dec = Decoder::new(BufReader::new(file), "tensor");
        dec.expect_version(MAGIC, TENSOR_FILE_VERSION)?;
        let kind = dec.str()?;
        let meta = dec.str()?;
        let count = dec.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name = dec.str()?;
            let rank = dec.u32()? as usize;
            if rank > 8 {
                return Err(Error::Format {
                    kind: "tensor",
                    reason: format!("tensor `{name}` has rank {rank}"),
                });
            }
            let shape = (0..rank)
                .map(|_| dec.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let values = dec.f64s(shape.iter().product())?;
            tensors.push((name, Tensor::new(shape, values)?));
        }
        dec.end()?;
        Ok(Self { kind, meta, tensors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let file = TensorFile {
            kind: "checkpoint".into(),
            meta: "{\"a\":1}".into(),
            tensors: vec![
                ("w".into(), Tensor::new(vec![2, 3], vec![1.0, -0.0, 3.5, f64::MIN_POSITIVE, 5.0, 6.0]).unwrap()),
                ("b".into(), Tensor::new(vec![1], vec![0.1]).unwrap()),
            ],
        };
        file.save(&path).unwrap();
        let back = TensorFile::load(&path).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.get("w").unwrap().values()[1].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        std::fs::write(&path, b"not a tensor file").unwrap();
        assert!(TensorFile::load(&path).is_err());
    }
}
