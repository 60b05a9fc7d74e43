// SPDX-License-Identifier: Apache-2.0

//! On-disk k-mer database.
//!
//! Little-endian layout:
//!
//! | field        | type            |
//! |--------------|-----------------|
//! | magic        | `b"HDCAMDB1"`   |
//! | version      | u16 (= 1)       |
//! | k            | u16             |
//! | encoding     | u8              |
//! | flags        | u8, bit 0 dedup |
//! | word_bits    | u32             |
//! | row_count    | u64             |
//! | accession    | u16 len + UTF-8 |
//! | rows         | packed LSB-first, each padded to a byte boundary |

use std::io::Write;

use hdcam_core::genomics::KmerDb;
use hdcam_core::{BitWord, CamArray, Encoding};
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"HDCAMDB1";
pub const VERSION: u16 = 1;
const FLAG_DEDUP: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbFileHeader {
    pub version: u16,
    pub k: u16,
    pub encoding: Encoding,
    pub deduplicated: bool,
    pub word_bits: u32,
    pub row_count: u64,
    pub accession: String,
}

impl DbFileHeader {
    pub fn row_bytes(&self) -> usize {
        (self.word_bits as usize).div_ceil(8)
    }

    fn encoded_len(&self) -> usize {
        8 + 2 + 2 + 1 + 1 + 4 + 8 + 2 + self.accession.len()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DbFileError {
    #[error("bad magic: not an hdcam database")]
    BadMagic,
    #[error("unsupported database version {found} (expected {VERSION})")]
    UnsupportedVersion { found: u16 },
    #[error("truncated database: {needed} bytes needed, {got} present")]
    Truncated { needed: u64, got: u64 },
    #[error("database has {extra} unexpected trailing bytes")]
    TrailingBytes { extra: u64 },
    #[error("unknown encoding id {0}")]
    UnknownEncoding(u8),
    #[error("unknown flag bits {0:#04x}")]
    UnknownFlags(u8),
    #[error("word_bits {word_bits} disagrees with k = {k} under {encoding}")]
    WidthMismatch {
        word_bits: u32,
        k: u16,
        encoding: Encoding,
    },
    #[error("accession is not valid UTF-8")]
    BadAccession,
    #[error("{0} does not fit the header field")]
    Overflow(&'static str),
    #[error("row {row}: {reason}")]
    BadRow { row: u64, reason: String },
}

/// Serializes `db`.
pub fn to_bytes(db: &KmerDb) -> Result<Vec<u8>, DbFileError> {
    let header = DbFileHeader {
        version: VERSION,
        k: u16::try_from(db.k).map_err(|_| DbFileError::Overflow("k"))?,
        encoding: db.encoding,
        deduplicated: db.deduplicated,
        word_bits: u32::try_from(db.word_bits()).map_err(|_| DbFileError::Overflow("word_bits"))?,
        row_count: db.row_count() as u64,
        accession: db.source_accession.clone(),
    };
    let acc_len =
        u16::try_from(header.accession.len()).map_err(|_| DbFileError::Overflow("accession"))?;
    let mut out = Vec::with_capacity(header.encoded_len() + db.row_count() * header.row_bytes());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header.version.to_le_bytes());
    out.extend_from_slice(&header.k.to_le_bytes());
    out.push(header.encoding.file_id());
    out.push(if header.deduplicated { FLAG_DEDUP } else { 0 });
    out.extend_from_slice(&header.word_bits.to_le_bytes());
    out.extend_from_slice(&header.row_count.to_le_bytes());
    out.extend_from_slice(&acc_len.to_le_bytes());
    out.extend_from_slice(header.accession.as_bytes());
    for row in db.array.rows() {
        out.extend_from_slice(&row.to_bytes());
    }
    Ok(out)
}

pub fn write(db: &KmerDb, mut w: impl Write) -> std::io::Result<()> {
    let bytes =
        to_bytes(db).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    w.write_all(&bytes)
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, needed_total: u64) -> Result<&'a [u8], DbFileError> {
        if self.buf.len() - self.at < n {
            return Err(DbFileError::Truncated {
                needed: needed_total.max((self.at + n) as u64),
                got: self.buf.len() as u64,
            });
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DbFileError> {
        Ok(self.take(N, 0)?.try_into().expect("length checked"))
    }
}

/// Parses and validates the header alone.
pub fn read_header(buf: &[u8]) -> Result<DbFileHeader, DbFileError> {
    let mut c = Cursor { buf, at: 0 };
    if buf.len() < MAGIC.len() {
        return if MAGIC.starts_with(buf) {
            Err(DbFileError::Truncated {
                needed: MAGIC.len() as u64,
                got: buf.len() as u64,
            })
        } else {
            Err(DbFileError::BadMagic)
        };
    }
    if c.take(8, 0)? != MAGIC {
        return Err(DbFileError::BadMagic);
    }
    let version = u16::from_le_bytes(c.array()?);
    if version != VERSION {
        return Err(DbFileError::UnsupportedVersion { found: version });
    }
    let k = u16::from_le_bytes(c.array()?);
    let [enc_id] = c.array()?;
    let [flags] = c.array()?;
    let word_bits = u32::from_le_bytes(c.array()?);
    let row_count = u64::from_le_bytes(c.array()?);
    let acc_len = u16::from_le_bytes(c.array()?) as usize;
    let acc = c.take(acc_len, 0)?;

    let encoding = Encoding::from_file_id(enc_id).ok_or(DbFileError::UnknownEncoding(enc_id))?;
    if flags & !FLAG_DEDUP != 0 {
        return Err(DbFileError::UnknownFlags(flags & !FLAG_DEDUP));
    }
    if k == 0 || word_bits as u64 != k as u64 * encoding.bits_per_base() as u64 {
        return Err(DbFileError::WidthMismatch {
            word_bits,
            k,
            encoding,
        });
    }
    let accession = std::str::from_utf8(acc)
        .map_err(|_| DbFileError::BadAccession)?
        .to_string();
    Ok(DbFileHeader {
        version,
        k,
        encoding,
        deduplicated: flags & FLAG_DEDUP != 0,
        word_bits,
        row_count,
        accession,
    })
}

/// Parses a whole database. The buffer length must match the header
/// exactly.
pub fn from_bytes(buf: &[u8]) -> Result<KmerDb, DbFileError> {
    let header = read_header(buf)?;
    let start = header.encoded_len();
    let row_bytes = header.row_bytes() as u64;
    let needed = header
        .row_count
        .checked_mul(row_bytes)
        .and_then(|n| n.checked_add(start as u64))
        .ok_or(DbFileError::Overflow("row_count"))?;
    let got = buf.len() as u64;
    if got < needed {
        return Err(DbFileError::Truncated { needed, got });
    }
    if got > needed {
        return Err(DbFileError::TrailingBytes {
            extra: got - needed,
        });
    }
    let width = header.word_bits as usize;
    let mut array = CamArray::new(width).map_err(|e| DbFileError::BadRow {
        row: 0,
        reason: e.to_string(),
    })?;
    for (i, chunk) in buf[start..].chunks_exact(row_bytes as usize).enumerate() {
        let bad = |e: hdcam_core::Error| DbFileError::BadRow {
            row: i as u64,
            reason: e.to_string(),
        };
        let word = BitWord::from_bytes(width, chunk).map_err(bad)?;
        hdcam_core::genomics::decode(&word, header.encoding).map_err(bad)?;
        array.push(word).map_err(bad)?;
    }
    KmerDb::from_parts(
        header.k as usize,
        header.encoding,
        array,
        header.accession,
        header.deduplicated,
    )
    .map_err(|e| DbFileError::BadRow {
        row: 0,
        reason: e.to_string(),
    })
}
