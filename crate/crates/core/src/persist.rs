//! Structure files.
//!
//! All integers are little-endian `u64`; strings are a length followed by
//! UTF-8 bytes; bitsets use the [`Bitset::write_to`] layout.
//!
//! ```text
//! magic "BMF\0" | version u8 | kind u8 | hash family | body
//! hash family : tag u8 (0 seeded, 1 table) | k | [entries | (label, range, count, idx...)...]
//! filter body : m | k | n | bitset
//! matrix body : m | k | N | layout u8 (0 dense, 1 sparse) | ordering | m rows
//!               dense rows are N-bit bitsets, sparse rows store their prefix
//! vector body : N | ordering | N × filter body
//! ordering    : count | count × string
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bitset::{Bitset, Ordering, SparseRow};
use crate::error::{Error, Result};
use crate::filter::BloomFilter;
use crate::hashing::{FixedTable, HashFamily, HashKind};
use crate::matrix::{BloomMatrix, MatrixLayout};
use crate::vector::BloomVector;
use crate::MultiFilter;

pub const MAGIC: [u8; 4] = *b"BMF\0";
pub const FORMAT_VERSION: u8 = 1;

/// Lengths above this are treated as corruption rather than allocated.
const MAX_LEN: u64 = 1 << 36;

const KIND_FILTER: u8 = 0;
const KIND_MATRIX: u8 = 1;
const KIND_VECTOR: u8 = 2;

/// Any structure that can be stored in a file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Structure {
    Filter(BloomFilter),
    Matrix(BloomMatrix),
    Vector(BloomVector),
}

impl Structure {
    /// The multi-set view, absent for a plain filter.
    pub fn as_multi(&self) -> Option<&dyn MultiFilter> {
        match self {
            Structure::Filter(_) => None,
            Structure::Matrix(m) => Some(m),
            Structure::Vector(v) => Some(v),
        }
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&[FORMAT_VERSION])?;
        match self {
            Structure::Filter(f) => {
                w.write_all(&[KIND_FILTER])?;
                write_family(w, f.family())?;
                f.write_body(w)
            }
            Structure::Matrix(m) => {
                w.write_all(&[KIND_MATRIX])?;
                write_family(w, m.family())?;
                write_matrix(w, m)
            }
            Structure::Vector(v) => {
                w.write_all(&[KIND_VECTOR])?;
                write_family(w, v.family())?;
                write_vector(w, v)
            }
        }
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if magic != MAGIC {
            return Err(Error::Corrupt("not a structure file".into()));
        }
        let version = read_u8(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Corrupt(format!("unsupported format version {version}")));
        }
        let kind = read_u8(r)?;
        let family = read_family(r)?;
        match kind {
            KIND_FILTER => Ok(Structure::Filter(BloomFilter::read_body(r, &family)?)),
            KIND_MATRIX => Ok(Structure::Matrix(read_matrix(r, family)?)),
            KIND_VECTOR => Ok(Structure::Vector(read_vector(r, family)?)),
            other => Err(Error::Corrupt(format!("unknown structure kind {other}"))),
        }
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Corrupt("unexpected end of file".into())
    } else {
        Error::Io(e)
    }
}

pub(crate) fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(b[0])
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

/// A `u64` count, rejected when implausibly large.
pub(crate) fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    let n = read_u64(r)?;
    if n > MAX_LEN {
        return Err(Error::Corrupt(format!("length {n} exceeds limit")));
    }
    Ok(n as usize)
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    write_u64(w, s.len() as u64)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = read_len(r)?;
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Corrupt("unexpected end of file".into()));
    }
    String::from_utf8(buf).map_err(|_| Error::Corrupt("string is not UTF-8".into()))
}

fn write_family<W: Write>(w: &mut W, family: &HashFamily) -> Result<()> {
    match family.kind() {
        HashKind::SeededMurmur32 => {
            w.write_all(&[0])?;
            write_u64(w, family.k() as u64)
        }
        HashKind::FixedTable => {
            w.write_all(&[1])?;
            write_u64(w, family.k() as u64)?;
            let entries = family.table().expect("table family").sorted_entries();
            write_u64(w, entries.len() as u64)?;
            for (label, range, indices) in entries {
                write_str(w, label)?;
                write_u64(w, range as u64)?;
                write_u64(w, indices.len() as u64)?;
                for &i in indices {
                    write_u64(w, i as u64)?;
                }
            }
            Ok(())
        }
    }
}

fn read_family<R: Read>(r: &mut R) -> Result<HashFamily> {
    let tag = read_u8(r)?;
    let k = read_len(r)?;
    let family = match tag {
        0 => HashFamily::murmur(k),
        1 => {
            let count = read_len(r)?;
            let mut table = FixedTable::new();
            for _ in 0..count {
                let label = read_str(r)?;
                let range = read_len(r)?;
                let n = read_len(r)?;
                let indices = (0..n).map(|_| read_len(r)).collect::<Result<Vec<_>>>()?;
                table.insert(&label, range, indices);
            }
            HashFamily::fixed_table(k, table)
        }
        other => return Err(Error::Corrupt(format!("unknown hash family tag {other}"))),
    };
    family.map_err(|e| Error::Corrupt(e.to_string()))
}

fn write_ordering<W: Write>(w: &mut W, ordering: &Ordering) -> Result<()> {
    write_u64(w, ordering.len() as u64)?;
    for item in ordering.items() {
        write_str(w, item)?;
    }
    Ok(())
}

fn read_ordering<R: Read>(r: &mut R) -> Result<Ordering> {
    let n = read_len(r)?;
    let mut ordering = Ordering::default();
    for _ in 0..n {
        ordering
            .push(read_str(r)?)
            .map_err(|e| Error::Corrupt(e.to_string()))?;
    }
    Ok(ordering)
}

fn write_matrix<W: Write>(w: &mut W, m: &BloomMatrix) -> Result<()> {
    write_u64(w, m.m() as u64)?;
    write_u64(w, m.k() as u64)?;
    write_u64(w, m.item_count() as u64)?;
    match m.layout() {
        MatrixLayout::Dense => w.write_all(&[0])?,
        MatrixLayout::Sparse => w.write_all(&[1])?,
    }
    write_ordering(w, m.ordering_ref())?;
    if let Some(rows) = m.dense_rows() {
        for row in rows {
            row.write_to(w)?;
        }
    }
    if let Some(rows) = m.sparse_rows() {
        for row in rows {
            row.write_to(w)?;
        }
    }
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R, family: HashFamily) -> Result<BloomMatrix> {
    let m = read_len(r)?;
    let k = read_len(r)?;
    let n = read_len(r)?;
    let layout = read_u8(r)?;
    if k != family.k() {
        return Err(Error::Corrupt(format!(
            "matrix k = {k} but hash family has {}",
            family.k()
        )));
    }
    if m == 0 {
        return Err(Error::Corrupt("matrix with zero rows".into()));
    }
    let ordering = read_ordering(r)?;
    if ordering.len() != n {
        return Err(Error::Corrupt(format!(
            "matrix N = {n} but ordering has {} items",
            ordering.len()
        )));
    }
    match layout {
        0 => {
            let rows = (0..m)
                .map(|_| {
                    let row = Bitset::read_from(r)?;
                    if row.len() != n {
                        return Err(Error::Corrupt(format!("row of {} bits, expected {n}", row.len())));
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BloomMatrix::from_dense_rows(rows, ordering, family))
        }
        1 => {
            let rows = (0..m)
                .map(|_| SparseRow::read_from(r, n))
                .collect::<Result<Vec<_>>>()?;
            Ok(BloomMatrix::from_sparse_rows(rows, ordering, family))
        }
        other => Err(Error::Corrupt(format!("unknown matrix layout {other}"))),
    }
}

fn write_vector<W: Write>(w: &mut W, v: &BloomVector) -> Result<()> {
    write_u64(w, v.len() as u64)?;
    write_ordering(w, v.ordering())?;
    for f in v.filters() {
        f.write_body(w)?;
    }
    Ok(())
}

fn read_vector<R: Read>(r: &mut R, family: HashFamily) -> Result<BloomVector> {
    let n = read_len(r)?;
    let ordering = read_ordering(r)?;
    if ordering.len() != n {
        return Err(Error::Corrupt(format!(
            "vector N = {n} but ordering has {} items",
            ordering.len()
        )));
    }
    let filters = (0..n)
        .map(|_| BloomFilter::read_body(r, &family))
        .collect::<Result<Vec<_>>>()?;
    BloomVector::from_parts(filters, ordering, family)
}
