// SPDX-License-Identifier: Apache-2.0

//! Behavioral simulator for a Hamming-distance-tolerant content-addressable
//! memory.
//!
//! * [`bitcam`]: packed words, Hamming distance and the digital search
//!   oracle.
//! * [`matchline`]: analog matchline discharge, sense decision, mismatch
//!   threshold, calibration, energy and throughput.
//! * [`variation`]: Monte-Carlo corners, cell variation and sampling jitter;
//!   match curves, sensitivity/specificity and uncertainty regions.
//! * [`genomics`]: FASTA input, base encodings, k-mer databases, read
//!   simulation and threshold-sweep classification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitcam;
pub mod error;
pub mod genomics;
pub mod matchline;
mod rng;
pub mod variation;

pub use bitcam::{hamming_distance, oracle_match, BitWord, CamArray};
pub use error::{Error, Result};
pub use genomics::{Encoding, Genome, KmerDb, ReadErrorProfile};
pub use matchline::{Decision, DischargeLaw, MatchlineParams};
pub use variation::{ConfusionCounts, Corner, CornerKind, MatchCurve, VariationSpec};
