//! Little-endian primitives shared by the binary file formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) struct Encoder<W> {
    inner: W,
}

impl<W: Write> Encoder<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.inner.write_all(b)
    }

    pub fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }

    pub fn finish(self) -> W {
        self.inner
    }
}

pub(crate) struct Decoder<R> {
    inner: R,
    kind: &'static str,
}

impl<R: Read> Decoder<R> {
    pub fn new(inner: R, kind: &'static str) -> Self {
        Self { inner, kind }
    }

    fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            kind: self.kind,
            reason: reason.into(),
        }
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner
            .read_exact(buf)
            .map_err(|e| self.malformed(format!("truncated ({e})")))
    }

    /// Checks the magic tag and returns the version that follows it.
    pub fn header(&mut self, magic: &[u8; 8]) -> Result<u32> {
        let mut got = [0u8; 8];
        self.fill(&mut got)?;
        if &got != magic {
            return Err(self.malformed("bad magic header"));
        }
        self.u32()
    }

    pub fn expect_version(&mut self, magic: &[u8; 8], expected: u32) -> Result<()> {
        let found = self.header(magic)?;
        if found != expected {
            return Err(Error::Version {
                kind: self.kind,
                found,
                expected,
            });
        }
        Ok(())
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut raw = vec![0u8; n.checked_mul(8).ok_or_else(|| self.malformed("length overflow"))?];
        self.fill(&mut raw)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        if len > 1 << 24 {
            return Err(self.malformed(format!("string length {len} is implausible")));
        }
        let mut b = vec![0u8; len];
        self.fill(&mut b)?;
        String::from_utf8(b).map_err(|_| self.malformed("string is not utf-8"))
    }

    /// Errors if any bytes remain.
    pub fn end(mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe) {
            Ok(0) => Ok(()),
            _ => Err(self.malformed("trailing bytes")),
        }
    }
}
