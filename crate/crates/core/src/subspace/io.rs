//! Binary basis file format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"SBXBASIS"
//! 8       4     version (u32) = 1
//! 12      8     dim D (u64)
//! 20      8     vector count M (u64)
//! 28      1     provenance: 0 gram-schmidt, 1 svd-full, 2 svd-top,
//!               3 svd-bottom, 4 identity
//! 29      1     has_singular_values: 0 or 1
//! 30      8*D*M vector data, f64, vector-major (vector 0 first)
//! ...     8*M   singular values, f64 (present iff flagged)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::OrthonormalSet;
use crate::subspace::{Provenance, SubspaceBasis};

const MAGIC: &[u8; 8] = b"SBXBASIS";
const VERSION: u32 = 1;

fn provenance_tag(p: Provenance) -> u8 {
    match p {
        Provenance::GramSchmidt => 0,
        Provenance::SvdFull => 1,
        Provenance::SvdTop => 2,
        Provenance::SvdBottom => 3,
        Provenance::Identity => 4,
    }
}

fn provenance_from_tag(tag: u8) -> Result<Provenance> {
    Ok(match tag {
        0 => Provenance::GramSchmidt,
        1 => Provenance::SvdFull,
        2 => Provenance::SvdTop,
        3 => Provenance::SvdBottom,
        4 => Provenance::Identity,
        other => {
            return Err(Error::InvalidBasisFile(format!("unknown provenance tag {other}")))
        }
    })
}

/// Writes a basis to the documented binary format.
pub fn save_basis(basis: &SubspaceBasis, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(basis.dim() as u64).to_le_bytes())?;
    w.write_all(&(basis.len() as u64).to_le_bytes())?;
    w.write_all(&[provenance_tag(basis.provenance())])?;
    w.write_all(&[basis.singular_values().is_some() as u8])?;
    for v in basis.orthonormal_set().vectors() {
        for x in v {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    if let Some(sv) = basis.singular_values() {
        for s in sv {
            w.write_all(&s.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(f64::from_le_bytes(read_exact_array::<8>(r)?));
    }
    Ok(out)
}

/// Reads a basis from the documented binary format, re-validating all
/// orthonormality and singular-value invariants.
pub fn load_basis(path: &Path) -> Result<SubspaceBasis> {
    let mut r = BufReader::new(File::open(path)?);
    let magic = read_exact_array::<8>(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::InvalidBasisFile("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_exact_array::<4>(&mut r)?);
    if version != VERSION {
        return Err(Error::InvalidBasisFile(format!("unsupported version {version}")));
    }
    let dim = u64::from_le_bytes(read_exact_array::<8>(&mut r)?) as usize;
    let m = u64::from_le_bytes(read_exact_array::<8>(&mut r)?) as usize;
    if dim == 0 || m == 0 || m > dim {
        return Err(Error::InvalidBasisFile(format!("bad shape: dim {dim}, M {m}")));
    }
    let provenance = provenance_from_tag(read_exact_array::<1>(&mut r)?[0])?;
    let has_sv = match read_exact_array::<1>(&mut r)?[0] {
        0 => false,
        1 => true,
        other => return Err(Error::InvalidBasisFile(format!("bad singular-value flag {other}"))),
    };
    let mut vectors = Vec::with_capacity(m);
    for _ in 0..m {
        vectors.push(read_f64s(&mut r, dim)?);
    }
    let singular_values = if has_sv { Some(read_f64s(&mut r, m)?) } else { None };
    let set = OrthonormalSet::new(dim, vectors)
        .map_err(|e| Error::InvalidBasisFile(format!("stored vectors are not orthonormal: {e}")))?;
    SubspaceBasis::from_parts(set, singular_values, provenance)
}
