// SPDX-License-Identifier: Apache-2.0
//! `OUFT` tensor container.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "OUFT"
//! 4       2           version (u16, currently 1)
//! 6       1           dtype   (0 = f32, 1 = i8, 2 = i32)
//! 7       1           rank    (1..=4)
//! 8       4 × rank    dims    (u32 each)
//! ..      Π dims × sz payload, row-major
//! ..      4           CRC-32 (IEEE) of every preceding byte
//! ```
//!
//! All multi-byte fields are little-endian. NumPy `.npy` files holding
//! `<f4`, `|i1` or `<i4` C-ordered arrays are accepted on read.

use std::fs;
use std::path::Path;

use crate::matrix::Matrix;
use crate::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"OUFT";
pub const TENSOR_VERSION: u16 = 1;
const NPY_MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    I8,
    I32,
}

impl DType {
    pub fn tag(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::I8 => 1,
            DType::I32 => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(DType::F32),
            1 => Ok(DType::I8),
            2 => Ok(DType::I32),
            t => Err(Error::Format(format!("unknown dtype tag {t}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 | DType::I32 => 4,
            DType::I8 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    I8(Vec<i8>),
    I32(Vec<i32>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::I8(_) => DType::I8,
            TensorData::I32(_) => DType::I32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::I8(v) => v.len(),
            TensorData::I32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    dims: Vec<u32>,
    data: TensorData,
}

impl TensorFile {
    pub fn new(dims: Vec<u32>, data: TensorData) -> Result<Self> {
        if dims.is_empty() || dims.len() > 4 {
            return Err(Error::Format(format!("rank {} outside 1..=4", dims.len())));
        }
        let expected = dims.iter().map(|&d| d as usize).product::<usize>();
        if expected != data.len() {
            return Err(Error::LengthMismatch { expected, actual: data.len() });
        }
        Ok(Self { dims, data })
    }

    pub fn from_matrix_f32(m: &Matrix<f32>) -> Self {
        Self { dims: vec![m.rows() as u32, m.cols() as u32], data: TensorData::F32(m.as_slice().to_vec()) }
    }

    pub fn from_matrix_i8(m: &Matrix<i8>) -> Self {
        Self { dims: vec![m.rows() as u32, m.cols() as u32], data: TensorData::I8(m.as_slice().to_vec()) }
    }

    pub fn from_matrix_i32(m: &Matrix<i32>) -> Self {
        Self { dims: vec![m.rows() as u32, m.cols() as u32], data: TensorData::I32(m.as_slice().to_vec()) }
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + self.data.len() * self.dtype().size() + 4);
        out.extend_from_slice(TENSOR_MAGIC);
        out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
        out.push(self.dtype().tag());
        out.push(self.dims.len() as u8);
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        match &self.data {
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::I8(v) => out.extend(v.iter().map(|&x| x as u8)),
            TensorData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(NPY_MAGIC) {
            return Self::from_npy(bytes);
        }
        if bytes.len() < 12 || &bytes[..4] != TENSOR_MAGIC {
            return Err(Error::Format("missing OUFT magic".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let version = u16::from_le_bytes([body[4], body[5]]);
        if version != TENSOR_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dtype = DType::from_tag(body[6])?;
        let rank = body[7] as usize;
        if rank == 0 || rank > 4 {
            return Err(Error::Format(format!("rank {rank} outside 1..=4")));
        }
        let header_len = 8 + 4 * rank;
        if body.len() < header_len {
            return Err(Error::Format("truncated header".into()));
        }
        let dims: Vec<u32> =
            body[8..header_len].chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        let count = dims.iter().map(|&d| d as usize).product::<usize>();
        let payload = &body[header_len..];
        if payload.len() != count * dtype.size() {
            return Err(Error::Format(format!(
                "payload is {} bytes, header implies {}",
                payload.len(),
                count * dtype.size()
            )));
        }
        Self::new(dims, decode_payload(dtype, payload))
    }

    fn from_npy(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 10 {
            return Err(Error::Format("truncated npy header".into()));
        }
        let major = bytes[6];
        let (header_len, start) = match major {
            1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
            2 | 3 => {
                if bytes.len() < 12 {
                    return Err(Error::Format("truncated npy header".into()));
                }
                (u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize, 12)
            }
            v => return Err(Error::Format(format!("unsupported npy version {v}"))),
        };
        let header = bytes
            .get(start..start + header_len)
            .and_then(|h| std::str::from_utf8(h).ok())
            .ok_or_else(|| Error::Format("bad npy header".into()))?;
        let descr = npy_field(header, "descr")?;
        let dtype = match descr.trim_matches(|c| c == '\'' || c == '"') {
            "<f4" => DType::F32,
            "|i1" | "<i1" | "i1" => DType::I8,
            "<i4" => DType::I32,
            d => return Err(Error::Format(format!("unsupported npy dtype {d}"))),
        };
        if npy_field(header, "fortran_order")?.trim() != "False" {
            return Err(Error::Format("Fortran-ordered npy arrays are not supported".into()));
        }
        let shape = npy_field(header, "shape")?;
        let dims = shape
            .trim_matches(|c| c == '(' || c == ')')
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u32>().map_err(|_| Error::Format(format!("bad npy dim {s}"))))
            .collect::<Result<Vec<_>>>()?;
        let count = dims.iter().map(|&d| d as usize).product::<usize>();
        let payload = &bytes[start + header_len..];
        if payload.len() != count * dtype.size() {
            return Err(Error::Format("npy payload length does not match shape".into()));
        }
        Self::new(dims, decode_payload(dtype, payload))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// View as a real matrix, flattening rank > 2 as conv filters.
    pub fn to_matrix_f32(&self) -> Result<Matrix<f32>> {
        let values: Vec<f32> = match &self.data {
            TensorData::F32(v) => v.clone(),
            TensorData::I8(v) => v.iter().map(|&x| x as f32).collect(),
            TensorData::I32(v) => v.iter().map(|&x| x as f32).collect(),
        };
        super::flatten_to_matrix(&self.dims, &values)
    }

    pub fn to_matrix_i8(&self) -> Result<Matrix<i8>> {
        match &self.data {
            TensorData::I8(v) => super::flatten_to_matrix(&self.dims, v),
            other => Err(Error::Format(format!("expected i8 tensor, found {:?}", other.dtype()))),
        }
    }

    pub fn to_matrix_i32(&self) -> Result<Matrix<i32>> {
        match &self.data {
            TensorData::I32(v) => super::flatten_to_matrix(&self.dims, v),
            other => Err(Error::Format(format!("expected i32 tensor, found {:?}", other.dtype()))),
        }
    }
}

fn decode_payload(dtype: DType, payload: &[u8]) -> TensorData {
    match dtype {
        DType::F32 => {
            TensorData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        }
        DType::I8 => TensorData::I8(payload.iter().map(|&b| b as i8).collect()),
        DType::I32 => {
            TensorData::I32(payload.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect())
        }
    }
}

/// Raw value text of `key` in a Python-literal npy header dict.
fn npy_field<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let missing = || Error::Format(format!("npy header lacks '{key}'"));
    let at = header.find(&format!("'{key}'")).ok_or_else(missing)?;
    let rest = header[at + key.len() + 2..].trim_start();
    let rest = rest.strip_prefix(':').ok_or_else(missing)?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else {
        rest.find([',', '}'])
    }
    .ok_or_else(missing)?;
    Ok(&rest[..end])
}
