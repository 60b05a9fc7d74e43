// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the CAM model, the Monte-Carlo engine and the genomics
/// pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("word width must be positive")]
    ZeroWidth,
    #[error("width mismatch: {left} bits vs {right} bits")]
    WidthMismatch { left: usize, right: usize },
    #[error("packed buffer holds {got} bytes, {expected} expected for a {width}-bit word")]
    PackedLength {
        width: usize,
        expected: usize,
        got: usize,
    },
    #[error("packed word has non-zero padding bits above width {width}")]
    DirtyPadding { width: usize },
    #[error("row index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("bit index {index} out of range for width {width}")]
    BitOutOfRange { index: usize, width: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("negative input {name} = {value}")]
    NegativeInput { name: &'static str, value: f64 },
    #[error("calibration needs at least 2 points, got {0}")]
    Underdetermined(usize),
    #[error("calibration table rejected: {0}")]
    BadCalibrationTable(String),
    #[error("v_eval = {v_eval} V is outside the energy table range [0.4, 0.6] V")]
    EnergyOutOfModel { v_eval: f64 },
    #[error("{bits} mismatching bits exceeds the {word_bits}-bit word")]
    TooManyMismatches { bits: u32, word_bits: u32 },

    #[error("Hamming distance {d} exceeds word width {word_bits}")]
    DistanceOutOfRange { d: u32, word_bits: u32 },
    #[error("empty Hamming-distance range")]
    EmptyRange,
    #[error("{metric} undefined: zero denominator")]
    UndefinedMetric { metric: &'static str },
    #[error("uncertainty region unbounded: curve never reaches probability {missing}")]
    RegionUnbounded { missing: u8 },
    #[error("empty compensation grid")]
    EmptyGrid,

    #[error("FASTA line {line}: {reason}")]
    Fasta { line: usize, reason: String },
    #[error("k = {k} exceeds sequence length {len}")]
    KTooLarge { k: usize, len: usize },
    #[error("ambiguous or invalid base {base:?} at position {pos}")]
    AmbiguousBase { base: char, pos: usize },
    #[error("bit group {index} is not a valid {encoding} base code")]
    UndecodableGroup {
        index: usize,
        encoding: &'static str,
    },
    #[error("no usable k-mers")]
    NoKmers,
    #[error("read length {read} does not match k = {k}")]
    ReadLength { read: usize, k: usize },
    #[error("read window starting at {pos} runs past the genome end ({len} bp)")]
    ReadPastEnd { pos: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
