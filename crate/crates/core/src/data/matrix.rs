//! Dense row-major `f32` matrix and its fixed-header binary file format.
//!
//! Layout, little-endian throughout:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `AIRT`                   |
//! | 4      | 4    | version `u32` = 1              |
//! | 8      | 1    | dtype `u8` = 0 (f32)           |
//! | 9      | 3    | reserved, zero                 |
//! | 12     | 8    | rows `u64`                     |
//! | 20     | 8    | cols `u64`                     |
//! | 28     | 4·rows·cols | values, row-major       |

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"AIRT";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0;
pub const HEADER_LEN: u64 = 28;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from row-major values, checking shape and finiteness.
    pub fn new(rows: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::Shape(format!("matrix must be non-empty, got {rows}x{dim}")));
        }
        if values.len() != rows * dim {
            return Err(Error::Shape(format!(
                "{rows}x{dim} matrix needs {} values, got {}",
                rows * dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(EmbeddingMatrix { rows, dim, values })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::Shape(format!("row {i} has {} values, expected {dim}", r.len())));
            }
            values.extend_from_slice(r);
        }
        EmbeddingMatrix::new(rows.len(), dim, values)
    }

    /// Narrows `f64` values to `f32`.
    pub fn from_f64(rows: usize, dim: usize, values: &[f64]) -> Result<Self> {
        EmbeddingMatrix::new(rows, dim, values.iter().map(|&v| v as f32).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.dim + col]
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::Shape(format!("row {i} out of bounds for {} rows", self.rows)));
            }
            values.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix::new(indices.len(), self.dim, values)
    }

    /// Vertical concatenation.
    pub fn stack(&self, other: &EmbeddingMatrix) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!(
                "cannot stack dim {} on dim {}",
                other.dim, self.dim
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(EmbeddingMatrix {
            rows: self.rows + other.rows,
            dim: self.dim,
            values,
        })
    }
}

struct CountingWriter<W> {
    inner: W,
    written: u64,
}

impl<W: Write> CountingWriter<W> {
    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.inner.write_all(bytes).map_err(|source| Error::Io {
            offset: self.written,
            source,
        })?;
        self.written += bytes.len() as u64;
        Ok(())
    }
}

/// Serializes `matrix` in the binary layout documented at module level.
pub fn write_matrix<W: Write>(matrix: &EmbeddingMatrix, sink: W) -> Result<()> {
    let mut out = CountingWriter {
        inner: sink,
        written: 0,
    };
    out.put(&MAGIC)?;
    out.put(&VERSION.to_le_bytes())?;
    out.put(&[DTYPE_F32, 0, 0, 0])?;
    out.put(&(matrix.rows as u64).to_le_bytes())?;
    out.put(&(matrix.dim as u64).to_le_bytes())?;
    // Encode in chunks so large matrices don't need a second full-size buffer.
    let mut buf = Vec::with_capacity(4 * 4096);
    for chunk in matrix.values.chunks(4096) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.put(&buf)?;
    }
    let offset = out.written;
    out.inner.flush().map_err(|source| Error::Io { offset, source })
}

fn read_exact_or_short<R: Read>(source: &mut R, buf: &mut [u8], offset: u64) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(source) => {
                return Err(Error::Io {
                    offset: offset + filled as u64,
                    source,
                })
            }
        }
    }
    Ok(filled)
}

/// Parses a matrix written by [`write_matrix`].
pub fn read_matrix<R: Read>(mut source: R) -> Result<EmbeddingMatrix> {
    let mut header = [0u8; HEADER_LEN as usize];
    let got = read_exact_or_short(&mut source, &mut header, 0)?;
    if got >= 4 && header[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:02X?}", &header[..4])));
    }
    if got < header.len() {
        return Err(Error::Length {
            expected: HEADER_LEN,
            actual: got as u64,
        });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let dtype = header[8];
    if version != VERSION || dtype != DTYPE_F32 {
        return Err(Error::Version { version, dtype });
    }
    if header[9..12] != [0, 0, 0] {
        return Err(Error::Format("reserved header bytes are not zero".into()));
    }
    let rows = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let cols = u64::from_le_bytes(header[20..28].try_into().unwrap());
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("empty matrix {rows}x{cols}")));
    }
    let count = rows
        .checked_mul(cols)
        .filter(|c| c.checked_mul(4).is_some())
        .ok_or_else(|| Error::Format(format!("matrix {rows}x{cols} overflows")))?;
    let expected = HEADER_LEN + 4 * count;

    let mut values = Vec::new();
    let mut buf = vec![0u8; 4 * 4096];
    let mut remaining = count;
    let mut offset = HEADER_LEN;
    while remaining > 0 {
        let want = remaining.min(4096) as usize * 4;
        let n = read_exact_or_short(&mut source, &mut buf[..want], offset)?;
        offset += n as u64;
        if n < want {
            return Err(Error::Length {
                expected,
                actual: offset,
            });
        }
        values.extend(
            buf[..want]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap())),
        );
        remaining -= (want / 4) as u64;
    }
    let mut extra = [0u8; 1];
    if read_exact_or_short(&mut source, &mut extra, offset)? != 0 {
        return Err(Error::Format(format!("trailing bytes after {expected}-byte payload")));
    }
    EmbeddingMatrix::new(rows as usize, cols as usize, values)
}

pub fn load_matrix(path: &Path) -> Result<EmbeddingMatrix> {
    let file = File::open(path).map_err(|source| Error::Io { offset: 0, source })?;
    read_matrix(BufReader::new(file))
}

pub fn save_matrix(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { offset: 0, source })?;
    write_matrix(matrix, BufWriter::new(file))
}
