//! Binary model files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        4 bytes   "FENC"
//! version      u32       FORMAT_VERSION
//! config_len   u32       byte length of the config block
//! config       UTF-8     "key=value\n" lines (EncoderConfig::to_pairs)
//! tensors      u32       number of tensor records
//!   name_len   u32
//!   name       UTF-8
//!   ndim       u32
//!   dims       ndim × u64
//!   data       prod(dims) × f64 (IEEE-754 bits)
//! records      u32       number of training-log records
//!   step       u64
//!   loss, reg_loss, average_loss, median_basis_norm   4 × f64
//! checksum     32 bytes  SHA-256 of every preceding byte
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::EncoderConfig;
use super::model::{FunctionEncoderModel, TrainingRecord};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const MAGIC: &[u8; 4] = b"FENC";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

pub fn encode_model(model: &FunctionEncoderModel) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());

    let config: String = model
        .config()
        .to_pairs()
        .into_iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect();
    put_u32(&mut buf, config.len());
    buf.extend_from_slice(config.as_bytes());

    let params = model.named_params();
    put_u32(&mut buf, params.len());
    for (name, t) in params {
        put_u32(&mut buf, name.len());
        buf.extend_from_slice(name.as_bytes());
        put_u32(&mut buf, t.ndim());
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    let log = model.training_log();
    put_u32(&mut buf, log.len());
    for r in log {
        buf.extend_from_slice(&(r.step as u64).to_le_bytes());
        for v in [r.loss, r.reg_loss, r.average_loss, r.median_basis_norm] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

pub fn decode_model(bytes: &[u8]) -> Result<FunctionEncoderModel> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Corrupt("missing FENC magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    if bytes.len() < 8 + CHECKSUM_LEN {
        return Err(Error::Corrupt("file truncated".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(Error::Corrupt("checksum mismatch (truncated or modified file)".into()));
    }

    let mut r = Reader { buf: body, pos: 8 };
    let config_len = r.u32()? as usize;
    let config_text = std::str::from_utf8(r.take(config_len)?)
        .map_err(|_| Error::Corrupt("config block is not UTF-8".into()))?;
    let pairs = config_text
        .lines()
        .map(|line| {
            line.split_once('=')
                .ok_or_else(|| Error::Corrupt(format!("bad config line '{line}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = EncoderConfig::from_pairs(pairs)?;

    let mut model = FunctionEncoderModel::new(config)?;
    let count = r.u32()? as usize;
    let mut loaded = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Corrupt("tensor name is not UTF-8".into()))?
            .to_string();
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u64()? as usize);
        }
        let n = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let n = n.ok_or_else(|| Error::Corrupt(format!("tensor {name} has an absurd shape")))?;
        let mut data = Vec::with_capacity(n.min(r.remaining() / 8));
        for _ in 0..n {
            data.push(r.f64()?);
        }
        let t = Tensor::new(shape, data).map_err(|e| Error::Corrupt(format!("tensor {name}: {e}")))?;
        loaded.push((name, t));
    }

    {
        let mut slots = model.named_params_mut();
        if slots.len() != loaded.len() {
            return Err(Error::Corrupt(format!(
                "expected {} tensors, found {}",
                slots.len(),
                loaded.len()
            )));
        }
        for ((slot_name, slot), (name, t)) in slots.iter_mut().zip(loaded) {
            if *slot_name != name || slot.shape() != t.shape() {
                return Err(Error::Corrupt(format!(
                    "tensor {name} {:?} does not match expected {slot_name} {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            **slot = t;
        }
    }

    let records = r.u32()? as usize;
    let mut log = Vec::with_capacity(records.min(r.remaining() / 40));
    for _ in 0..records {
        log.push(TrainingRecord {
            step: r.u64()? as usize,
            loss: r.f64()?,
            reg_loss: r.f64()?,
            average_loss: r.f64()?,
            median_basis_norm: r.f64()?,
        });
    }
    if r.remaining() != 0 {
        return Err(Error::Corrupt(format!("{} trailing bytes", r.remaining())));
    }
    model.set_log(log);
    Ok(model)
}

/// Writes the model atomically (temporary file, then rename).
pub fn save_model(model: &FunctionEncoderModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("fenc.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode_model(model))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FunctionEncoderModel> {
    decode_model(&fs::read(path)?)
}

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    let v = u32::try_from(v).expect("section larger than 4 GiB");
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Corrupt("unexpected end of data".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
