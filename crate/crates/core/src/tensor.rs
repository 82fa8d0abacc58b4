//! Dense tensors and the VTEN binary container.
//!
//! Layout of a VTEN file:
//!
//! | offset      | size      | content                                 |
//! |-------------|-----------|-----------------------------------------|
//! | 0           | 4         | magic `VTEN`                            |
//! | 4           | 1         | version, always 1                       |
//! | 5           | 1         | dtype: 0 = f32, 1 = u8                  |
//! | 6           | 1         | rank `r`, 1 to 8                        |
//! | 7           | 4·r       | dims, little-endian u32                 |
//! | 7 + 4·r     | remainder | row-major payload, little-endian values |
//!
//! The payload must be exactly `product(dims) · size_of(dtype)` bytes; short
//! and long files are both rejected so that reading and writing are exact
//! inverses of each other.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VTEN";
pub const VERSION: u8 = 1;
pub const MAX_RANK: usize = 8;
const HEADER_LEN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    U8,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::U8 => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(DType::F32),
            1 => Ok(DType::U8),
            other => Err(Error::format(format!("unknown dtype code {other}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::U8 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    U8(Vec<u8>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::U8(_) => DType::U8,
        }
    }

    /// Element `i` widened to f64.
    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            TensorData::F32(v) => v[i] as f64,
            TensorData::U8(v) => v[i] as f64,
        }
    }
}

/// An in-memory VTEN tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    dims: Vec<usize>,
    data: TensorData,
}

fn element_count(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.len() > MAX_RANK {
        return Err(Error::format(format!(
            "rank must be 1..={MAX_RANK}, got {}",
            dims.len()
        )));
    }
    dims.iter().try_fold(1usize, |acc, &d| {
        if d > u32::MAX as usize {
            return Err(Error::format(format!("dimension {d} does not fit in u32")));
        }
        acc.checked_mul(d)
            .ok_or_else(|| Error::format("dims product overflows"))
    })
}

impl TensorFile {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        let n = element_count(&dims)?;
        if n != data.len() {
            return Err(Error::format(format!(
                "dims {dims:?} need {n} elements, payload has {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_f32(dims: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        Self::new(dims, TensorData::F32(values))
    }

    pub fn from_u8(dims: Vec<usize>, values: Vec<u8>) -> Result<Self> {
        Self::new(dims, TensorData::U8(values))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    /// Values as f32 regardless of storage type.
    pub fn to_f32_vec(&self) -> Vec<f32> {
        match &self.data {
            TensorData::F32(v) => v.clone(),
            TensorData::U8(v) => v.iter().map(|&b| b as f32).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.dims.len() + self.data.len() * self.dtype().size());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.dtype().code());
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        match &self.data {
            TensorData::F32(v) => {
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            TensorData::U8(v) => out.extend_from_slice(v),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::format("truncated header"));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::format("bad magic, expected VTEN"));
        }
        if bytes[4] != VERSION {
            return Err(Error::format(format!("unsupported version {}", bytes[4])));
        }
        let dtype = DType::from_code(bytes[5])?;
        let rank = bytes[6] as usize;
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::format(format!("rank must be 1..={MAX_RANK}, got {rank}")));
        }
        let payload_start = HEADER_LEN + 4 * rank;
        if bytes.len() < payload_start {
            return Err(Error::format("truncated dims"));
        }
        let dims: Vec<usize> = bytes[HEADER_LEN..payload_start]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
            .collect();
        let n = element_count(&dims)?;
        let want = n
            .checked_mul(dtype.size())
            .ok_or_else(|| Error::format("payload size overflows"))?;
        let payload = &bytes[payload_start..];
        if payload.len() < want {
            return Err(Error::format(format!(
                "truncated payload: expected {want} bytes, found {}",
                payload.len()
            )));
        }
        if payload.len() > want {
            return Err(Error::format(format!(
                "{} trailing bytes after payload",
                payload.len() - want
            )));
        }
        let data = match dtype {
            DType::F32 => TensorData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            ),
            DType::U8 => TensorData::U8(payload.to_vec()),
        };
        Ok(Self { dims, data })
    }
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<TensorFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::NotFound(format!("{}: {e}", path.display())))?;
    TensorFile::from_bytes(&bytes)
}

pub fn write_tensor(tensor: &TensorFile, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, tensor.to_bytes())?;
    Ok(())
}

/// Row-major f32 matrix used for token sets and projections.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    /// Stacks matrices with equal column counts vertically.
    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix> {
        let cols = parts.first().map_or(0, |m| m.cols);
        if let Some(bad) = parts.iter().find(|m| m.cols != cols) {
            return Err(Error::dims(format!("cannot stack {} columns onto {cols}", bad.cols)));
        }
        let rows = parts.iter().map(|m| m.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for m in parts {
            data.extend_from_slice(&m.data);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn to_tensor(&self) -> TensorFile {
        TensorFile {
            dims: vec![self.rows, self.cols],
            data: TensorData::F32(self.data.clone()),
        }
    }

    pub fn from_tensor(t: &TensorFile) -> Result<Self> {
        if t.rank() != 2 {
            return Err(Error::format(format!(
                "expected a rank-2 tensor, got rank {}",
                t.rank()
            )));
        }
        Matrix::from_vec(t.dims()[0], t.dims()[1], t.to_f32_vec())
    }
}
