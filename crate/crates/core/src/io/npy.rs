//! NPY v1.0 reading and writing for little-endian `f32` tensors.
//!
//! Only C-order arrays are supported; Fortran-order files and other dtypes
//! are rejected. Format description:
//! <https://numpy.org/doc/stable/reference/generated/numpy.lib.format.html>

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::FormatError;
use crate::geometry::GridSpec;
use crate::grid::Grid;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

/// A raw `f32` tensor read from an NPY file.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyTensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl NpyTensor {
    /// `(channels, nx, ny, nz)`; 3-D tensors count as a single channel.
    pub fn grid_shape(&self) -> Result<[usize; 4], FormatError> {
        match self.shape.as_slice() {
            &[c, x, y, z] => Ok([c, x, y, z]),
            &[x, y, z] => Ok([1, x, y, z]),
            other => Err(FormatError::Npy(format!("expected a 3-D or 4-D tensor, got shape {other:?}"))),
        }
    }

    pub fn into_grid(self, spec: GridSpec) -> Result<Grid<f32>, FormatError> {
        let shape = self.grid_shape()?;
        let want = [spec.channels, spec.shape[0], spec.shape[1], spec.shape[2]];
        if shape != want {
            return Err(FormatError::Npy(format!("tensor shape {shape:?} does not match grid {want:?}")));
        }
        Ok(Grid::from_data(spec, self.data)?)
    }
}

fn header_text(shape: &[usize]) -> String {
    let dims = match shape {
        [one] => format!("{one},"),
        _ => shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", "),
    };
    let mut h = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': ({dims}), }}");
    let unpadded = MAGIC.len() + 2 + 2 + h.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    h.extend(std::iter::repeat_n(' ', pad));
    h.push('\n');
    h
}

pub fn write_tensor<W: Write>(shape: &[usize], data: &[f32], mut w: W) -> Result<(), FormatError> {
    let expected: usize = shape.iter().product();
    if expected != data.len() {
        return Err(FormatError::Npy(format!("shape {shape:?} needs {expected} values, got {}", data.len())));
    }
    let header = header_text(shape);
    let len = u16::try_from(header.len()).map_err(|_| FormatError::Npy("header too long for v1.0".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&[1, 0])?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_npy_to<W: Write>(grid: &Grid<f32>, w: W) -> Result<(), FormatError> {
    write_tensor(&grid.shape(), grid.data(), w)
}

/// Writes `grid` as a `(channels, nx, ny, nz)` float32 array.
pub fn write_npy(grid: &Grid<f32>, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let file = File::create(path)?;
    write_npy_to(grid, BufWriter::new(file))
}

fn dict_value<'a>(dict: &'a str, key: &str) -> Result<&'a str, FormatError> {
    let needle = format!("'{key}'");
    let at = dict.find(&needle).ok_or_else(|| FormatError::Npy(format!("header lacks '{key}'")))?;
    let rest = dict[at + needle.len()..].trim_start();
    rest.strip_prefix(':').map(str::trim_start).ok_or_else(|| FormatError::Npy(format!("malformed '{key}' entry")))
}

fn parse_header(dict: &str) -> Result<Vec<usize>, FormatError> {
    let descr = dict_value(dict, "descr")?;
    let descr = descr
        .strip_prefix('\'')
        .and_then(|s| s.split('\'').next())
        .ok_or_else(|| FormatError::Npy("malformed descr".into()))?;
    if descr != "<f4" {
        return Err(FormatError::Npy(format!("unsupported dtype '{descr}' (only '<f4' is supported)")));
    }
    let fortran = dict_value(dict, "fortran_order")?;
    if fortran.starts_with("True") {
        return Err(FormatError::Npy("unsupported layout: fortran_order arrays are not supported".into()));
    } else if !fortran.starts_with("False") {
        return Err(FormatError::Npy("malformed fortran_order".into()));
    }
    let shape = dict_value(dict, "shape")?;
    let inner = shape
        .strip_prefix('(')
        .and_then(|s| s.split(')').next())
        .ok_or_else(|| FormatError::Npy("malformed shape".into()))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| FormatError::Npy(format!("bad dimension '{s}'"))))
        .collect()
}

pub fn read_npy_from<R: Read>(mut r: R) -> Result<NpyTensor, FormatError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic[..6] != MAGIC {
        return Err(FormatError::Npy("missing \\x93NUMPY magic".into()));
    }
    let header_len = match magic[6] {
        1 => {
            let mut b = [0u8; 2];
            r.read_exact(&mut b)?;
            u16::from_le_bytes(b) as usize
        }
        2 | 3 => {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            u32::from_le_bytes(b) as usize
        }
        v => return Err(FormatError::Npy(format!("unsupported format version {v}.{}", magic[7]))),
    };
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header)?;
    let header = String::from_utf8(header).map_err(|_| FormatError::Npy("header is not text".into()))?;
    let shape = parse_header(&header)?;
    let count = shape
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(*d))
        .ok_or_else(|| FormatError::Npy("shape overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 4 {
        return Err(FormatError::Npy(format!("expected {} data bytes, found {}", count * 4, bytes.len())));
    }
    let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok(NpyTensor { shape, data })
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<NpyTensor, FormatError> {
    read_npy_from(BufReader::new(File::open(path)?))
}
