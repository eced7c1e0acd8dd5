//! Weight-bundle files: a single-line JSON header followed by the raw
//! weights as a flat little-endian f32 blob. Identical bytes load to
//! identical tensors, so identical files give identical predictions.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::Real;
use crate::error::{Error, Result};

const FORMAT: &str = "ggd-weights-v1";

#[derive(Serialize, Deserialize)]
struct Header<M> {
    format: String,
    meta: M,
    shapes: Vec<Vec<usize>>,
}

pub fn to_bytes<M: Serialize>(meta: &M, tensors: &[&Tensor]) -> Result<Vec<u8>> {
    let header = Header {
        format: FORMAT.to_string(),
        meta,
        shapes: tensors.iter().map(|t| t.shape().to_vec()).collect(),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    for t in tensors {
        for &v in t.data() {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(out)
}

pub fn from_bytes<M: DeserializeOwned>(bytes: &[u8]) -> Result<(M, Vec<Tensor>)> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Parse("weight bundle has no header line".into()))?;
    let header: Header<M> = serde_json::from_slice(&bytes[..newline])?;
    if header.format != FORMAT {
        return Err(Error::Parse(format!(
            "unsupported weight format {:?}",
            header.format
        )));
    }
    let mut blob = &bytes[newline + 1..];
    let mut tensors = Vec::with_capacity(header.shapes.len());
    for shape in &header.shapes {
        let numel: usize = shape.iter().product();
        if blob.len() < numel * 4 {
            return Err(Error::Parse("weight blob is truncated".into()));
        }
        let mut data = Vec::with_capacity(numel);
        for chunk in blob[..numel * 4].chunks_exact(4) {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            data.push(v as Real);
        }
        blob = &blob[numel * 4..];
        tensors.push(Tensor::from_data(shape, data)?);
    }
    if !blob.is_empty() {
        return Err(Error::Parse(format!(
            "weight blob has {} trailing bytes",
            blob.len()
        )));
    }
    Ok((header.meta, tensors))
}

pub fn write_bundle<M: Serialize>(path: &Path, meta: &M, tensors: &[&Tensor]) -> Result<()> {
    fs::write(path, to_bytes(meta, tensors)?)?;
    Ok(())
}

pub fn read_bundle<M: DeserializeOwned>(path: &Path) -> Result<(M, Vec<Tensor>)> {
    from_bytes(&fs::read(path)?)
}
