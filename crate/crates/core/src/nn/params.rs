use std::path::Path;

use sha2::{Digest, Sha256};

use super::Tensor;
use crate::error::{ensure, Error, Result};
use crate::Scalar;

pub const PARAMS_MAGIC: &[u8; 8] = b"CCIDPARM";
pub const PARAMS_VERSION: u32 = 1;

/// Named network parameters in a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelParams<T = f32> {
    entries: Vec<(String, Tensor<T>)>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    /// Version of the on-disk format this build reads and writes.
    pub fn format_version(&self) -> u32 {
        PARAMS_VERSION
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> Result<()> {
        let name = name.into();
        ensure!(
            self.get(&name).is_none(),
            InvalidParameter,
            "duplicate parameter name {name:?}"
        );
        ensure!(name.len() <= u16::MAX as usize, InvalidParameter, "parameter name too long");
        self.entries.push((name, tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<T>)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn tensor(&self, index: usize) -> &Tensor<T> {
        &self.entries[index].1
    }

    pub fn tensor_mut(&mut self, index: usize) -> &mut Tensor<T> {
        &mut self.entries[index].1
    }

    /// Same names and shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), Tensor::zeros(t.shape())))
                .collect(),
        }
    }

    pub fn total_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn check_same_layout<U: Scalar>(&self, other: &ModelParams<U>) -> Result<()> {
        ensure!(
            self.len() == other.len()
                && self
                    .iter()
                    .zip(other.iter())
                    .all(|((na, ta), (nb, tb))| na == nb && ta.shape() == tb.shape()),
            DimensionMismatch,
            "parameter layouts differ"
        );
        Ok(())
    }

    /// Rearranges these parameters into the order of `layout`, matching by
    /// name and checking shapes.
    pub fn conform_to<U: Scalar>(mut self, layout: &ModelParams<U>) -> Result<Self> {
        ensure!(
            self.len() == layout.len(),
            DimensionMismatch,
            "expected {} parameter tensors, found {}",
            layout.len(),
            self.len()
        );
        let mut entries = Vec::with_capacity(layout.len());
        for (name, reference) in layout.iter() {
            let pos = self
                .entries
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| Error::DimensionMismatch(format!("missing parameter {name:?}")))?;
            let (n, t) = self.entries.swap_remove(pos);
            ensure!(
                t.shape() == reference.shape(),
                DimensionMismatch,
                "parameter {name:?} has shape {:?}, expected {:?}",
                t.shape(),
                reference.shape()
            );
            entries.push((n, t));
        }
        Ok(Self { entries })
    }

    /// Adds `other` elementwise (layouts must match).
    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        self.check_same_layout(other)?;
        for ((_, a), (_, b)) in self.entries.iter_mut().zip(&other.entries) {
            for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        let f = T::lit(factor);
        for (_, t) in &mut self.entries {
            t.data_mut().iter_mut().for_each(|v| *v *= f);
        }
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            entries: self.entries.iter().map(|(n, t)| (n.clone(), t.cast())).collect(),
        }
    }

    /// Serialises to the `CCIDPARM` format (values stored as `f32`).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.total_values());
        out.extend_from_slice(PARAMS_MAGIC);
        out.extend_from_slice(&PARAMS_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (name, t) in &self.entries {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.rank() as u8);
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        ensure!(r.take(8)? == PARAMS_MAGIC, Decode, "not a parameter file (bad magic)");
        let version = r.u32()?;
        ensure!(
            version == PARAMS_VERSION,
            Decode,
            "unsupported parameter file version {version} (expected {PARAMS_VERSION})"
        );
        let count = r.u32()? as usize;
        let mut params = Self::new();
        for _ in 0..count {
            let len = r.u16()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Decode("parameter name is not UTF-8".into()))?;
            let rank = r.take(1)?[0] as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let payload = r.take(n.checked_mul(4).ok_or_else(|| Error::Decode("tensor too large".into()))?)?;
            let data = payload
                .chunks_exact(4)
                .map(|c| T::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
                .collect();
            params.push(name, Tensor::new(shape, data).map_err(|e| Error::Decode(e.to_string()))?)?;
        }
        ensure!(r.pos == bytes.len(), Decode, "trailing bytes after parameter data");
        Ok(params)
    }

    /// Hex SHA-256 of the serialised form.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Decode("parameter file is truncated".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
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

pub fn save_params<T: Scalar>(params: &ModelParams<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, params.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_params<T: Scalar>(path: impl AsRef<Path>) -> Result<ModelParams<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelParams::from_bytes(&bytes).map_err(|e| Error::format(path, e.to_string()))
}
