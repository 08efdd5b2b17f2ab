//! `CGOF` binary field files and their JSON sidecars.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 0..4  | magic `CGOF` |
//! | 4     | version (1) |
//! | 5     | rank (1 scalar, 3 vector) |
//! | 6..8  | reserved, zero |
//! | 8..20 | three `u32` axis lengths |
//! | 20..28| `f64` half width |
//! | 28..  | `rank · n³` complex samples as `(re, im)` `f64` pairs, row-major, components consecutive |

use super::{Grid, ScalarField, VectorField};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 4] = b"CGOF";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Field {
    pub fn rank(&self) -> u8 {
        match self {
            Field::Scalar(_) => 1,
            Field::Vector(_) => 3,
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            Field::Scalar(f) => f.grid(),
            Field::Vector(f) => f.grid(),
        }
    }
}

/// Sidecar metadata stored next to a field file as `<name>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub lambda: Option<f64>,
    pub gamma0: Option<f64>,
    pub description: String,
}

pub fn encode(field: &Field) -> Vec<u8> {
    let g = field.grid();
    let n = g.n();
    let rank = field.rank() as usize;
    let mut out = Vec::with_capacity(HEADER_LEN + rank * g.len() * 16);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(field.rank());
    out.extend_from_slice(&[0, 0]);
    for _ in 0..3 {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&g.half_width().to_le_bytes());
    let mut push = |f: &ScalarField| {
        for z in f.data() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    };
    match field {
        Field::Scalar(f) => push(f),
        Field::Vector(v) => v.components().iter().for_each(&mut push),
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        return Err(Error::Truncated { expected: HEADER_LEN, found: bytes.len() });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes[4] != VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    let rank = bytes[5];
    if rank != 1 && rank != 3 {
        return Err(Error::RankMismatch { expected: "1 or 3".into(), found: rank });
    }
    let axis = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let dims = [axis(0), axis(1), axis(2)];
    if dims[0] != dims[1] || dims[1] != dims[2] {
        return Err(Error::DimensionMismatch(format!("non-cubic axis lengths {dims:?}")));
    }
    let half_width = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let grid = Grid::new(dims[0], half_width).map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    let count = rank as usize * grid.len();
    let expected = HEADER_LEN + 16 * count;
    if bytes.len() < expected {
        return Err(Error::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(Error::DimensionMismatch(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let mut samples = bytes[HEADER_LEN..].chunks_exact(16).map(|c| {
        Complex64::new(
            f64::from_le_bytes(c[..8].try_into().unwrap()),
            f64::from_le_bytes(c[8..].try_into().unwrap()),
        )
    });
    let mut take = || ScalarField::from_vec(grid, samples.by_ref().take(grid.len()).collect());
    match rank {
        1 => Ok(Field::Scalar(take()?)),
        _ => {
            let c0 = take()?;
            let c1 = take()?;
            let c2 = take()?;
            Ok(Field::Vector(VectorField::new([c0, c1, c2])?))
        }
    }
}

pub fn write_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    decode(&std::fs::read(path)?)
}

pub fn read_scalar(path: impl AsRef<Path>) -> Result<ScalarField> {
    match read_field(path)? {
        Field::Scalar(f) => Ok(f),
        Field::Vector(_) => Err(Error::RankMismatch { expected: "1".into(), found: 3 }),
    }
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<VectorField> {
    match read_field(path)? {
        Field::Vector(f) => Ok(f),
        Field::Scalar(_) => Err(Error::RankMismatch { expected: "3".into(), found: 1 }),
    }
}

/// `dir/name.cgof` → `dir/name.meta.json`.
pub fn sidecar_path(path: impl AsRef<Path>) -> PathBuf {
    path.as_ref().with_extension("meta.json")
}

pub fn write_sidecar(path: impl AsRef<Path>, meta: &FieldMeta) -> Result<()> {
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<FieldMeta> {
    Ok(serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?)
}
