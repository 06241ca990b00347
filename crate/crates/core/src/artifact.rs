//! Versioned binary container for named `f64` arrays plus JSON metadata.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic     8 bytes  "GSFAVAR\0"
//! version   u32
//! meta_len  u32, then meta_len bytes of UTF-8 JSON
//! count     u32
//! count × { name_len u16, name bytes, ndim u8, ndim × u64 dims, Π dims × f64 }
//! ```
//!
//! Arrays are stored row-major.

use crate::numeric::{Matrix, Vector};
use serde_json::Value;
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"GSFAVAR\0";
pub const VERSION: u32 = 1;
const MAX_META: usize = 64 << 20;
const MAX_NDIM: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum ArtifactError {
    #[error("not an artifact (bad magic)")]
    BadMagic,
    #[error("unsupported artifact version {0}")]
    UnsupportedVersion(u32),
    #[error("artifact truncated at byte {0}")]
    Truncated(usize),
    #[error("malformed artifact: {0}")]
    Malformed(String),
    #[error("missing array '{0}'")]
    MissingArray(String),
    #[error("array '{name}' has shape {found:?}, expected {expected:?}")]
    Shape { name: String, found: Vec<usize>, expected: Vec<usize> },
    #[error("metadata: {0}")]
    Meta(String),
}

pub type Result<T> = std::result::Result<T, ArtifactError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Array {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(dims.iter().product::<usize>(), data.len(), "array data length");
        Self { name: name.into(), dims, data }
    }

    pub fn from_matrix(name: impl Into<String>, m: &Matrix) -> Self {
        let data = m.transpose().as_slice().to_vec();
        Self::new(name, vec![m.nrows(), m.ncols()], data)
    }

    pub fn from_vector(name: impl Into<String>, v: &Vector) -> Self {
        Self::new(name, vec![v.len()], v.as_slice().to_vec())
    }

    pub fn from_slice(name: impl Into<String>, v: &[f64]) -> Self {
        Self::new(name, vec![v.len()], v.to_vec())
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        match self.dims[..] {
            [r, c] => Ok(Matrix::from_row_slice(r, c, &self.data)),
            _ => Err(self.shape_error(vec![0, 0])),
        }
    }

    pub fn to_vector(&self) -> Result<Vector> {
        match self.dims[..] {
            [_] => Ok(Vector::from_column_slice(&self.data)),
            _ => Err(self.shape_error(vec![0])),
        }
    }

    /// Splits a 3-d array `(n, r, c)` into `n` matrices.
    pub fn to_matrices(&self) -> Result<Vec<Matrix>> {
        match self.dims[..] {
            [n, r, c] => {
                Ok((0..n).map(|i| Matrix::from_row_slice(r, c, &self.data[i * r * c..(i + 1) * r * c])).collect())
            }
            _ => Err(self.shape_error(vec![0, 0, 0])),
        }
    }

    pub fn from_matrices(name: impl Into<String>, ms: &[Matrix], rows: usize, cols: usize) -> Self {
        let mut data = Vec::with_capacity(ms.len() * rows * cols);
        for m in ms {
            assert_eq!(m.shape(), (rows, cols), "stacked matrix shape");
            data.extend_from_slice(m.transpose().as_slice());
        }
        Self::new(name, vec![ms.len(), rows, cols], data)
    }

    fn shape_error(&self, expected: Vec<usize>) -> ArtifactError {
        ArtifactError::Shape { name: self.name.clone(), found: self.dims.clone(), expected }
    }

    pub fn expect_dims(&self, expected: &[usize]) -> Result<()> {
        if self.dims != expected {
            return Err(self.shape_error(expected.to_vec()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    /// Free-form metadata; keys are emitted in sorted order.
    pub meta: Value,
    pub arrays: Vec<Array>,
}

impl Artifact {
    pub fn new(meta: Value) -> Self {
        Self { meta, arrays: Vec::new() }
    }

    pub fn push(&mut self, a: Array) -> &mut Self {
        self.arrays.push(a);
        self
    }

    pub fn get(&self, name: &str) -> Result<&Array> {
        self.arrays.iter().find(|a| a.name == name).ok_or_else(|| ArtifactError::MissingArray(name.to_string()))
    }

    pub fn matrix(&self, name: &str) -> Result<Matrix> {
        self.get(name)?.to_matrix()
    }

    pub fn vector(&self, name: &str) -> Result<Vector> {
        self.get(name)?.to_vector()
    }

    pub fn meta_field<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self.meta.get(key).ok_or_else(|| ArtifactError::Meta(format!("missing key '{key}'")))?;
        serde_json::from_value(v.clone()).map_err(|e| ArtifactError::Meta(format!("{key}: {e}")))
    }

    pub fn encode(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.meta).expect("json values always serialize");
        let mut out =
            Vec::with_capacity(32 + meta.len() + self.arrays.iter().map(|a| 8 * a.data.len() + 64).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            let name = a.name.as_bytes();
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name);
            out.push(a.dims.len() as u8);
            for d in &a.dims {
                out.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(ArtifactError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(ArtifactError::UnsupportedVersion(version));
        }
        let meta_len = r.u32()? as usize;
        if meta_len > MAX_META {
            return Err(ArtifactError::Malformed(format!("metadata length {meta_len}")));
        }
        let meta: Value = serde_json::from_slice(r.take(meta_len)?).map_err(|e| ArtifactError::Meta(e.to_string()))?;
        let count = r.u32()? as usize;
        let mut arrays = Vec::new();
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| ArtifactError::Malformed("array name is not UTF-8".into()))?
                .to_string();
            let ndim = r.u8()? as usize;
            if ndim > MAX_NDIM {
                return Err(ArtifactError::Malformed(format!("array '{name}' has {ndim} dimensions")));
            }
            let mut dims = Vec::with_capacity(ndim);
            let mut len: usize = 1;
            for _ in 0..ndim {
                let d = usize::try_from(r.u64()?).map_err(|_| ArtifactError::Malformed("dimension overflow".into()))?;
                len = len.checked_mul(d).ok_or_else(|| ArtifactError::Malformed("dimension overflow".into()))?;
                dims.push(d);
            }
            let nbytes = len.checked_mul(8).ok_or_else(|| ArtifactError::Malformed("dimension overflow".into()))?;
            let raw = r.take(nbytes)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            arrays.push(Array { name, dims, data });
        }
        if r.pos != bytes.len() {
            return Err(ArtifactError::Malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { meta, arrays })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end =
            self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or(ArtifactError::Truncated(self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Artifact {
        let mut a = Artifact::new(json!({"kind": "test", "seed": 3}));
        a.push(Array::from_matrix("m", &Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])));
        a.push(Array::from_slice("v", &[-0.5, f64::MIN_POSITIVE]));
        a.push(Array::new("empty", vec![0, 4], vec![]));
        a
    }

    #[test]
    fn roundtrip() {
        let a = sample();
        let b = Artifact::decode(&a.encode()).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.matrix("m").unwrap()[(1, 0)], 4.0);
        assert_eq!(b.meta_field::<u64>("seed").unwrap(), 3);
    }

    #[test]
    fn row_major_on_disk() {
        let bytes = sample().encode();
        let meta_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let first = 16 + meta_len + 4 + 2 + 1 + 1 + 16;
        let v = f64::from_le_bytes(bytes[first + 8..first + 16].try_into().unwrap());
        assert_eq!(v, 2.0);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().encode();
        assert_eq!(Artifact::decode(&bytes[..bytes.len() - 1]), Err(ArtifactError::Truncated(bytes.len() - 8)));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(Artifact::decode(&bad), Err(ArtifactError::BadMagic));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert_eq!(Artifact::decode(&bad), Err(ArtifactError::UnsupportedVersion(9)));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(Artifact::decode(&long), Err(ArtifactError::Malformed(_))));
    }

    #[test]
    fn huge_dims_do_not_allocate() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(b"{}");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.push(b'a');
        bytes.push(2);
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(Artifact::decode(&bytes), Err(ArtifactError::Malformed(_))));
        bytes.truncate(bytes.len() - 16);
        bytes.extend_from_slice(&(1u64 << 40).to_le_bytes());
        bytes.extend_from_slice(&1u64.to_le_bytes());
        assert!(matches!(Artifact::decode(&bytes), Err(ArtifactError::Truncated(_))));
    }

    #[test]
    fn missing_and_shape() {
        let a = sample();
        assert_eq!(a.get("nope").unwrap_err(), ArtifactError::MissingArray("nope".into()));
        assert!(matches!(a.vector("m"), Err(ArtifactError::Shape { .. })));
        let ms = vec![Matrix::identity(2, 2), Matrix::from_element(2, 2, 3.0)];
        let s = Array::from_matrices("s", &ms, 2, 2);
        assert_eq!(s.to_matrices().unwrap(), ms);
    }
}
