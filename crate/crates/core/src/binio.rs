//! Little-endian primitives shared by the binary checkpoint formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

pub(crate) fn write_u64<W: Write>(w: &mut W, v: usize) -> Result<()> {
    w.write_all(&(v as u64).to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<usize> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf) as usize)
}

pub(crate) fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Raw row-major data only; the caller supplies the shape on read.
pub(crate) fn write_matrix_raw<W: Write>(w: &mut W, m: &Matrix) -> Result<()> {
    for v in m.data() {
        write_f64(w, *v)?;
    }
    Ok(())
}

pub(crate) fn read_matrix_raw<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Matrix> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(read_f64(r)?);
    }
    Matrix::new(rows, cols, data)
}

/// Shape header followed by raw data; self-describing on read.
pub(crate) fn write_matrix_shaped<W: Write>(w: &mut W, m: &Matrix) -> Result<()> {
    write_u64(w, m.rows())?;
    write_u64(w, m.cols())?;
    write_matrix_raw(w, m)
}

pub(crate) fn read_matrix_shaped<R: Read>(r: &mut R) -> Result<Matrix> {
    let rows = read_u64(r)?;
    let cols = read_u64(r)?;
    if rows == 0 || cols == 0 || rows.saturating_mul(cols) > (1 << 32) {
        return Err(Error::Schema(format!("implausible matrix shape {rows}x{cols}")));
    }
    read_matrix_raw(r, rows, cols)
}

/// After the last field, any further byte means the file does not match
/// the format that was just parsed.
pub(crate) fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Schema("trailing bytes after checkpoint".to_string()));
    }
    Ok(())
}
