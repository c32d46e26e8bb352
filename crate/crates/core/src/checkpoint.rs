//! Binary field checkpoints.
//!
//! Layout, all little-endian:
//!
//! | bytes  | content                                   |
//! |--------|-------------------------------------------|
//! | 8      | magic `CRNLSFLD`                          |
//! | 4      | format version (u32, currently 1)         |
//! | 8      | R (f64)                                   |
//! | 8      | N (u64)                                   |
//! | 4      | dimension n (u32, always 3)               |
//! | 8      | t (f64)                                   |
//! | 4      | normalization tag (u32, see below)        |
//! | 16 N   | `(Re w_j, Im w_j)` pairs as f64           |
//! | 32     | SHA-256 of every preceding byte           |
//!
//! Normalization tag 1: samples are `w_j = r_j u(r_j)` at `r_j = j R / (N + 1)`.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Grid, RadialField, DIM};

pub const MAGIC: &[u8; 8] = b"CRNLSFLD";
pub const VERSION: u32 = 1;
pub const NORMALIZATION_W_EQUALS_R_U: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 8 + 4 + 8 + 4;
const DIGEST_LEN: usize = 32;

pub fn encode(field: &RadialField) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.points() + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&g.radius().to_le_bytes());
    out.extend_from_slice(&(g.points() as u64).to_le_bytes());
    out.extend_from_slice(&(DIM as u32).to_le_bytes());
    out.extend_from_slice(&field.t().to_le_bytes());
    out.extend_from_slice(&NORMALIZATION_W_EQUALS_R_U.to_le_bytes());
    for z in field.w() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const K: usize>(&mut self) -> [u8; K] {
        let mut a = [0u8; K];
        a.copy_from_slice(&self.bytes[self.pos..self.pos + K]);
        self.pos += K;
        a
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

/// Decodes a checkpoint. When `grid` is given and matches the header, the
/// field shares it; otherwise a new grid is built from the header.
pub fn decode(bytes: &[u8], grid: Option<&Arc<Grid>>) -> Result<RadialField> {
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(Error::Checkpoint(format!(
            "truncated file ({} bytes)",
            bytes.len()
        )));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checkpoint("checksum mismatch".into()));
    }
    if &body[..8] != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut rd = Reader {
        bytes: body,
        pos: 8,
    };
    let version = rd.u32();
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let radius = rd.f64();
    let points = rd.u64() as usize;
    let dim = rd.u32();
    let t = rd.f64();
    let tag = rd.u32();
    if dim as usize != DIM {
        return Err(Error::Checkpoint(format!(
            "dimension {dim} is not supported"
        )));
    }
    if tag != NORMALIZATION_W_EQUALS_R_U {
        return Err(Error::Checkpoint(format!(
            "unknown normalization tag {tag}"
        )));
    }
    if body.len() != HEADER_LEN + 16 * points {
        return Err(Error::Checkpoint(format!(
            "payload holds {} bytes, header promises {} points",
            body.len() - HEADER_LEN,
            points
        )));
    }
    let mut w = Vec::with_capacity(points);
    for _ in 0..points {
        let re = rd.f64();
        let im = rd.f64();
        w.push(Complex64::new(re, im));
    }
    let grid = match grid {
        Some(g) if g.radius().to_bits() == radius.to_bits() && g.points() == points => {
            Arc::clone(g)
        }
        _ => Grid::new(radius, points)?,
    };
    RadialField::from_w(&grid, w, t)
}

pub fn write(path: &Path, field: &RadialField) -> Result<()> {
    std::fs::write(path, encode(field))?;
    Ok(())
}

pub fn read(path: &Path, grid: Option<&Arc<Grid>>) -> Result<RadialField> {
    decode(&std::fs::read(path)?, grid)
}
