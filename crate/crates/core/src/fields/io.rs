//! Field serialization.
//!
//! CSV: header row, one node per line in storage order, every float written
//! with 17 significant digits. Binary: magic `LDGQ`, u32 version, grid
//! (3 × u64 dims, 3 × f64 box_min, 3 × f64 box_max), then five f64
//! components per node, all little-endian, nodes row-major.

use super::field::{Field, ScalarField, SymField, TensorField};
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::tensor::QTensor;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"LDGQ";
const VERSION: u32 = 1;

pub const TENSOR_HEADER: &str = "x,y,z,q11,q22,q12,q13,q23";
pub const SYM_HEADER: &str = "x,y,z,m11,m22,m33,m12,m13,m23";
pub const SCALAR_HEADER: &str = "x,y,z,value";

fn write_rows<T>(path: &Path, f: &Field<T>, header: &str, row: impl Fn(&T) -> Vec<f64>) -> Result<()>
where
    T: super::field::FieldValue,
{
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    let g = f.grid();
    for (i, v) in f.values().iter().enumerate() {
        let x = g.position(i);
        let cols: Vec<String> = x.iter().copied().chain(row(v)).map(|c| format!("{c:.16e}")).collect();
        writeln!(w, "{}", cols.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tensor_csv(path: &Path, f: &TensorField) -> Result<()> {
    write_rows(path, f, TENSOR_HEADER, |q| q.components().to_vec())
}

pub fn write_sym_csv(path: &Path, f: &SymField) -> Result<()> {
    write_rows(path, f, SYM_HEADER, |m| vec![m.xx, m.yy, m.zz, m.xy, m.xz, m.yz])
}

pub fn write_scalar_csv(path: &Path, f: &ScalarField) -> Result<()> {
    write_rows(path, f, SCALAR_HEADER, |v| vec![*v])
}

/// Reads a tensor CSV written for `grid`, checking node count and positions.
pub fn read_tensor_csv(path: &Path, grid: &GridSpec) -> Result<TensorField> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty file".into()))??;
    if header.trim() != TENSOR_HEADER {
        return Err(Error::Format(format!("unexpected header `{header}`")));
    }
    let h = grid.spacing().iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let mut values = Vec::with_capacity(grid.len());
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", n + 2)))?;
        if cols.len() != 8 {
            return Err(Error::Format(format!("line {}: expected 8 columns, got {}", n + 2, cols.len())));
        }
        let idx = values.len();
        if idx >= grid.len() {
            return Err(Error::GridMismatch);
        }
        let x = grid.position(idx);
        if (0..3).any(|a| (x[a] - cols[a]).abs() > 1e-9 * h) {
            return Err(Error::GridMismatch);
        }
        values.push(QTensor::new(cols[3], cols[4], cols[5], cols[6], cols[7]));
    }
    Field::from_values(grid, values)
}

pub fn write_tensor_binary(path: &Path, f: &TensorField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for d in g.dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for x in g.box_min.iter().chain(g.box_max.iter()) {
        w.write_all(&x.to_le_bytes())?;
    }
    for q in f.values() {
        for c in q.components() {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor_binary(path: &Path) -> Result<TensorField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        r.read_exact(&mut b8)?;
        *d = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| Error::Format("dimension overflow".into()))?;
    }
    let mut bounds = [0.0f64; 6];
    for b in bounds.iter_mut() {
        r.read_exact(&mut b8)?;
        *b = f64::from_le_bytes(b8);
    }
    let grid = GridSpec::new(dims, [bounds[0], bounds[1], bounds[2]], [bounds[3], bounds[4], bounds[5]])?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let mut c = [0.0; 5];
        for x in c.iter_mut() {
            r.read_exact(&mut b8)?;
            *x = f64::from_le_bytes(b8);
        }
        values.push(QTensor::from_components(c));
    }
    if r.read(&mut b8)? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    Field::from_values(&grid, values)
}
