//! Binary parameter container.
//!
//! Layout (little-endian): magic `EGONETCK`, `u32` version, 32-byte config
//! digest, `u32` tensor count, then per tensor `u32` name length, UTF-8
//! name, `u32` rank, `u64` dims, `f64` values.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use egonet_tensor::Tensor;

use super::config::EgoNetConfig;
use super::params::EgoNetParams;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"EGONETCK";
pub const CHECKPOINT_VERSION: u32 = 1;

const MAX_RANK: usize = 8;

pub fn write_checkpoint<W: Write>(mut out: W, config: &EgoNetConfig, params: &EgoNetParams) -> io::Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&config.digest())?;
    out.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, t) in params.iter() {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(t.rank() as u32).to_le_bytes())?;
        for &d in t.shape() {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in t.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(input: &mut R) -> io::Result<u32> {
    read_array::<4, _>(input).map(u32::from_le_bytes)
}

/// Parses a container, returning the stored config digest and tensors.
pub fn read_checkpoint<R: Read>(mut input: R) -> Result<([u8; 32], EgoNetParams)> {
    let bad = |reason: String| Error::invalid("checkpoint", reason);
    let truncated = |e: io::Error| bad(format!("truncated or unreadable: {e}"));
    let magic: [u8; 8] = read_array(&mut input).map_err(truncated)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = read_u32(&mut input).map_err(truncated)?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let digest: [u8; 32] = read_array(&mut input).map_err(truncated)?;
    let count = read_u32(&mut input).map_err(truncated)?;
    let mut params = EgoNetParams::new();
    for _ in 0..count {
        let len = read_u32(&mut input).map_err(truncated)? as usize;
        let mut name = vec![0u8; len];
        input.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name).map_err(|_| bad("tensor name is not UTF-8".into()))?;
        let rank = read_u32(&mut input).map_err(truncated)? as usize;
        if rank > MAX_RANK {
            return Err(bad(format!("{name}: rank {rank} too large")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u64::from_le_bytes(read_array(&mut input).map_err(truncated)?) as usize);
        }
        let numel = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| n > 0 && n < (1 << 31))
            .ok_or_else(|| bad(format!("{name}: bad shape {shape:?}")))?;
        let mut raw = vec![0u8; numel * 8];
        input.read_exact(&mut raw).map_err(truncated)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if params.get(&name).is_some() {
            return Err(bad(format!("duplicate tensor {name:?}")));
        }
        params.insert(name, Tensor::new(shape, data)?);
    }
    Ok((digest, params))
}

pub fn save_checkpoint(path: &Path, config: &EgoNetConfig, params: &EgoNetParams) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(io::BufWriter::new(file), config, params).map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint and checks that it was written for `config`.
pub fn load_checkpoint(path: &Path, config: &EgoNetConfig) -> Result<EgoNetParams> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (digest, params) = read_checkpoint(io::BufReader::new(file)).map_err(|e| Error::data(path, e.to_string()))?;
    if digest != config.digest() {
        return Err(Error::data(path, "checkpoint was written for a different model config"));
    }
    Ok(params)
}
