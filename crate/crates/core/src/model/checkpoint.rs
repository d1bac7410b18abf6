//! Binary parameter files.
//!
//! Layout: the 6-byte magic `MSMSF1`, then little-endian `u32` entry count
//! and per entry: `u16` name length, UTF-8 name, `u8` rank, `rank × u32`
//! extents and `f32` values.

use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

pub const MAGIC: &[u8; 6] = b"MSMSF1";
const MAGIC_STEM: &[u8; 5] = b"MSMSF";

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointEntry {
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

/// Ordered name → tensor map, including optional training state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    entries: IndexMap<String, CheckpointEntry>,
}

impl Checkpoint {
    /// Optimizer moments and loop counters live under these prefixes.
    pub fn is_training_state(name: &str) -> bool {
        name.starts_with("adam.") || name.starts_with("train.")
    }

    pub fn insert(&mut self, name: impl Into<String>, entry: CheckpointEntry) {
        self.entries.insert(name.into(), entry);
    }

    pub fn insert_tensor<T: Element>(&mut self, name: &str, t: &Tensor<T>) {
        self.insert(
            name,
            CheckpointEntry {
                dims: t.shape().dims().to_vec(),
                values: t.data().iter().map(|v| v.to_f64() as f32).collect(),
            },
        );
    }

    pub fn insert_scalar(&mut self, name: &str, value: f32) {
        self.insert(
            name,
            CheckpointEntry {
                dims: vec![1],
                values: vec![value],
            },
        );
    }

    pub fn get(&self, name: &str) -> Option<&CheckpointEntry> {
        self.entries.get(name)
    }

    pub fn scalar(&self, name: &str) -> Option<f32> {
        self.get(name).and_then(|e| e.values.first().copied())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Scalar count over model parameters (training state excluded).
    pub fn parameter_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|(k, _)| !Self::is_training_state(k))
            .map(|(_, e)| e.values.len())
            .sum()
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        for (name, e) in &self.entries {
            let bytes = name.as_bytes();
            w.write_all(&(bytes.len() as u16).to_le_bytes())?;
            w.write_all(bytes)?;
            w.write_all(&[e.dims.len() as u8])?;
            for &d in &e.dims {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            for &v in &e.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(MAGIC.len())?;
        if magic != MAGIC {
            if magic.starts_with(MAGIC_STEM) {
                return Err(Error::format(format!(
                    "unsupported checkpoint version {:?} (expected {:?})",
                    String::from_utf8_lossy(magic),
                    String::from_utf8_lossy(MAGIC)
                )));
            }
            return Err(Error::format("not a checkpoint file (bad magic bytes)"));
        }
        let count = r.u32()? as usize;
        let mut entries = IndexMap::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::format("checkpoint entry name is not UTF-8"))?
                .to_string();
            let rank = r.take(1)?[0] as usize;
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let numel: usize = dims.iter().product();
            let raw = r.take(numel.checked_mul(4).ok_or_else(|| Error::format("entry too large"))?)?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if entries.insert(name.clone(), CheckpointEntry { dims, values }).is_some() {
                return Err(Error::format(format!("duplicate checkpoint entry {name}")));
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::format(format!(
                "{} trailing bytes after the last checkpoint entry",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(&mut f))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::format(format!("checkpoint truncated at byte {}", self.bytes.len()))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
