// SPDX-License-Identifier: Apache-2.0

//! Virus DNA classification on top of the CAM model.
//!
//! A reference genome is cut into overlapping k-mers, each encoded into one
//! CAM row. Reads (k bases long, with injected sequencing errors) are used as
//! query patterns; a read is classified as belonging to the reference when
//! at least one row matches within the configured mismatch threshold.
//!
//! Both base encodings put every pair of distinct bases exactly two bits
//! apart, so a threshold of `t` basepairs is a threshold of `2 t` bits.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bitcam::{BitWord, CamArray};
use crate::error::{Error, Result};
use crate::matchline::MatchlineParams;
use crate::rng::{keyed_stream, DOMAIN_POSITION, DOMAIN_READ};
use crate::variation::{sensitivity, specificity, trial, ConfusionCounts, VariationSpec};

pub const BASES: [u8; 4] = *b"ACGT";

/// Extra reference bases reserved past a read window for deletions.
pub const READ_SLACK: usize = 8;

const IUPAC: &[u8] = b"ACGTURYSWKMBDHVN-";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    pub accession: String,
    pub description: String,
    /// Uppercase IUPAC characters.
    pub sequence: Vec<u8>,
}

impl Genome {
    pub fn new(accession: impl Into<String>, sequence: impl AsRef<[u8]>) -> Self {
        Self {
            accession: accession.into(),
            description: String::new(),
            sequence: sequence.as_ref().to_ascii_uppercase(),
        }
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

/// Parses multi-record FASTA text. Sequence lines are concatenated and
/// uppercased; ambiguity codes are kept.
pub fn parse_fasta(text: &str) -> Result<Vec<Genome>> {
    let mut genomes: Vec<Genome> = Vec::new();
    let mut header_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end();
        if let Some(header) = line.strip_prefix('>') {
            finish_record(&genomes, header_line)?;
            let header = header.trim();
            let (accession, description) = match header.split_once(char::is_whitespace) {
                Some((id, rest)) => (id, rest.trim()),
                None => (header, ""),
            };
            if accession.is_empty() {
                return Err(Error::Fasta {
                    line: line_no,
                    reason: "header without identifier".into(),
                });
            }
            genomes.push(Genome {
                accession: accession.to_string(),
                description: description.to_string(),
                sequence: Vec::new(),
            });
            header_line = line_no;
            continue;
        }
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let Some(current) = genomes.last_mut() else {
            return Err(Error::Fasta {
                line: line_no,
                reason: "sequence data before the first '>' header".into(),
            });
        };
        for (col, c) in line.bytes().enumerate() {
            let up = c.to_ascii_uppercase();
            if !IUPAC.contains(&up) {
                return Err(Error::Fasta {
                    line: line_no,
                    reason: format!("illegal character {:?} at column {}", c as char, col + 1),
                });
            }
            current.sequence.push(up);
        }
    }
    finish_record(&genomes, header_line)?;
    if genomes.is_empty() {
        return Err(Error::Fasta {
            line: 1,
            reason: "no '>' header found".into(),
        });
    }
    Ok(genomes)
}

fn finish_record(genomes: &[Genome], header_line: usize) -> Result<()> {
    match genomes.last() {
        Some(g) if g.sequence.is_empty() => Err(Error::Fasta {
            line: header_line,
            reason: format!("record {} has an empty sequence", g.accession),
        }),
        _ => Ok(()),
    }
}

fn is_acgt(b: u8) -> bool {
    matches!(b, b'A' | b'C' | b'G' | b'T')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Encoding {
    /// A=0001, C=0010, G=0100, T=1000.
    OneHot4,
    /// A=000, C=011, G=110, T=101.
    Gray3,
}

impl Encoding {
    pub fn bits_per_base(self) -> usize {
        match self {
            Encoding::OneHot4 => 4,
            Encoding::Gray3 => 3,
        }
    }

    /// Code of `base` as an integer whose bit `j` is bit `j` of the group.
    pub fn code(self, base: u8) -> Option<u8> {
        let i = BASES.iter().position(|&b| b == base)?;
        Some(self.codes()[i])
    }

    pub fn base(self, code: u8) -> Option<u8> {
        let i = self.codes().iter().position(|&c| c == code)?;
        Some(BASES[i])
    }

    fn codes(self) -> [u8; 4] {
        match self {
            Encoding::OneHot4 => [0b0001, 0b0010, 0b0100, 0b1000],
            Encoding::Gray3 => [0b000, 0b011, 0b110, 0b101],
        }
    }

    /// Identifier used in database files.
    pub fn file_id(self) -> u8 {
        match self {
            Encoding::OneHot4 => 1,
            Encoding::Gray3 => 2,
        }
    }

    pub fn from_file_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Encoding::OneHot4),
            2 => Some(Encoding::Gray3),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Encoding::OneHot4 => "onehot4",
            Encoding::Gray3 => "gray3",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "onehot4" | "onehot" | "one-hot" => Ok(Encoding::OneHot4),
            "gray3" | "gray" => Ok(Encoding::Gray3),
            _ => Err(Error::InvalidParameter {
                name: "encoding",
                reason: format!("unknown encoding {s:?}, expected onehot4 or gray3"),
            }),
        }
    }
}

/// Concatenates per-base codes; base 0 occupies the lowest bit group.
pub fn encode(bases: &[u8], encoding: Encoding) -> Result<BitWord> {
    let bpb = encoding.bits_per_base();
    let mut word = BitWord::zeros(bases.len() * bpb)?;
    for (pos, &b) in bases.iter().enumerate() {
        let code = encoding.code(b).ok_or(Error::AmbiguousBase {
            base: b as char,
            pos,
        })?;
        for j in 0..bpb {
            if code >> j & 1 == 1 {
                word.set(pos * bpb + j, true)?;
            }
        }
    }
    Ok(word)
}

pub fn decode(word: &BitWord, encoding: Encoding) -> Result<Vec<u8>> {
    let bpb = encoding.bits_per_base();
    if !word.width().is_multiple_of(bpb) {
        return Err(Error::InvalidParameter {
            name: "word",
            reason: format!("width {} is not a multiple of {bpb}", word.width()),
        });
    }
    (0..word.width() / bpb)
        .map(|g| {
            let mut code = 0u8;
            for j in 0..bpb {
                code |= (word.get(g * bpb + j)? as u8) << j;
            }
            encoding.base(code).ok_or(Error::UndecodableGroup {
                index: g,
                encoding: encoding.name(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KmerWindow<'a> {
    pub offset: usize,
    pub bases: &'a [u8],
}

/// Stride-1 windows of length `k`, skipping any window that touches a
/// non-ACGT character. With `dedup`, only the first occurrence of each
/// k-mer is kept.
pub fn extract_kmers(genome: &Genome, k: usize, dedup: bool) -> Result<Vec<KmerWindow<'_>>> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be positive".into(),
        });
    }
    let seq = &genome.sequence;
    if k > seq.len() {
        return Err(Error::KTooLarge { k, len: seq.len() });
    }
    let mut seen: HashSet<&[u8]> = HashSet::new();
    let mut out = Vec::with_capacity(seq.len() - k + 1);
    // Start of the current run of ACGT characters.
    let mut run_start = 0;
    for end in 0..seq.len() {
        if !is_acgt(seq[end]) {
            run_start = end + 1;
            continue;
        }
        if end + 1 - run_start >= k {
            let offset = end + 1 - k;
            let bases = &seq[offset..=end];
            if !dedup || seen.insert(bases) {
                out.push(KmerWindow { offset, bases });
            }
        }
    }
    Ok(out)
}

/// Reference k-mer database: one encoded k-mer per CAM row.
#[derive(Debug, Clone, PartialEq)]
pub struct KmerDb {
    pub k: usize,
    pub encoding: Encoding,
    pub array: CamArray,
    pub source_accession: String,
    pub deduplicated: bool,
    /// First genome offset of each row, when built from a genome.
    pub offset_index: Option<Vec<usize>>,
}

impl KmerDb {
    /// Assembles a database from stored rows, checking the width contract.
    pub fn from_parts(
        k: usize,
        encoding: Encoding,
        array: CamArray,
        source_accession: String,
        deduplicated: bool,
    ) -> Result<Self> {
        let width = k * encoding.bits_per_base();
        if array.width() != width {
            return Err(Error::WidthMismatch {
                left: width,
                right: array.width(),
            });
        }
        Ok(Self {
            k,
            encoding,
            array,
            source_accession,
            deduplicated,
            offset_index: None,
        })
    }

    pub fn word_bits(&self) -> usize {
        self.array.width()
    }

    pub fn row_count(&self) -> usize {
        self.array.row_count()
    }

    pub fn decode_row(&self, index: usize) -> Result<Vec<u8>> {
        decode(self.array.row(index)?, self.encoding)
    }
}

pub fn build_db(genome: &Genome, k: usize, encoding: Encoding, dedup: bool) -> Result<KmerDb> {
    let windows = extract_kmers(genome, k, dedup)?;
    if windows.is_empty() {
        return Err(Error::NoKmers);
    }
    let rows = windows
        .iter()
        .map(|w| encode(w.bases, encoding))
        .collect::<Result<Vec<_>>>()?;
    let array = CamArray::from_rows(k * encoding.bits_per_base(), rows)?;
    let mut db = KmerDb::from_parts(k, encoding, array, genome.accession.clone(), dedup)?;
    db.offset_index = Some(windows.iter().map(|w| w.offset).collect());
    Ok(db)
}

/// Per-base sequencing error probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadErrorProfile {
    pub sub_rate: f64,
    pub ins_rate: f64,
    pub del_rate: f64,
}

impl Default for ReadErrorProfile {
    fn default() -> Self {
        Self {
            sub_rate: 0.036,
            ins_rate: 0.002,
            del_rate: 0.002,
        }
    }
}

impl ReadErrorProfile {
    pub fn error_free() -> Self {
        Self {
            sub_rate: 0.0,
            ins_rate: 0.0,
            del_rate: 0.0,
        }
    }

    pub fn substitution_only(rate: f64) -> Self {
        Self {
            sub_rate: rate,
            ..Self::error_free()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("sub_rate", self.sub_rate),
            ("ins_rate", self.ins_rate),
            ("del_rate", self.del_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{r} is not a probability"),
                });
            }
        }
        // Rates are mutually exclusive outcomes of one draw; a deletion-only
        // total of 1 would never emit a base.
        let total = self.sub_rate + self.ins_rate + self.del_rate;
        if total > 1.0 || self.del_rate >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "profile",
                reason: format!("rates sum to {total}, must not exceed 1"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulatedRead {
    pub index: u64,
    /// Reference offset of the first consumed base.
    pub pos: usize,
    pub bases: Vec<u8>,
    pub substitutions: u32,
    pub insertions: u32,
    pub deletions: u32,
}

/// Emits a `k`-base read starting at reference offset `pos`. For every
/// emitted base one uniform draw selects deletion (skip a reference base
/// and draw again), insertion (random base, reference not consumed),
/// substitution (random different base) or a faithful copy.
pub fn simulate_read(
    genome: &Genome,
    pos: usize,
    k: usize,
    profile: &ReadErrorProfile,
    seed: u64,
    read_index: u64,
) -> Result<SimulatedRead> {
    profile.validate()?;
    let seq = &genome.sequence;
    if pos + k + READ_SLACK > seq.len() {
        return Err(Error::ReadPastEnd {
            pos,
            len: seq.len(),
        });
    }
    let mut rng = keyed_stream(DOMAIN_READ, seed, read_index, 0);
    let mut read = SimulatedRead {
        index: read_index,
        pos,
        bases: Vec::with_capacity(k),
        substitutions: 0,
        insertions: 0,
        deletions: 0,
    };
    let ins_cut = profile.del_rate + profile.ins_rate;
    let sub_cut = ins_cut + profile.sub_rate;
    let mut cursor = pos;
    while read.bases.len() < k {
        let u: f64 = rng.random();
        if u < ins_cut && u >= profile.del_rate {
            read.bases.push(BASES[rng.random_range(0..4)]);
            read.insertions += 1;
            continue;
        }
        let reference = *seq.get(cursor).ok_or(Error::ReadPastEnd {
            pos,
            len: seq.len(),
        })?;
        cursor += 1;
        if u < profile.del_rate {
            read.deletions += 1;
        } else if u < sub_cut {
            read.bases.push(different_base(&mut rng, reference));
            read.substitutions += 1;
        } else {
            read.bases.push(reference);
        }
    }
    Ok(read)
}

fn different_base<R: Rng>(rng: &mut R, reference: u8) -> u8 {
    let others: Vec<u8> = BASES.iter().copied().filter(|&b| b != reference).collect();
    others[rng.random_range(0..others.len())]
}

/// `count` reads from uniformly random start positions whose window (plus
/// slack) is pure ACGT. Read `i` depends only on `(seed, i)`.
pub fn simulate_reads(
    genome: &Genome,
    count: u64,
    k: usize,
    profile: &ReadErrorProfile,
    seed: u64,
) -> Result<Vec<SimulatedRead>> {
    profile.validate()?;
    let span = k + READ_SLACK;
    if span > genome.len() {
        return Err(Error::KTooLarge {
            k: span,
            len: genome.len(),
        });
    }
    let last_start = genome.len() - span;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let pos = (0..1000u64)
                .map(|attempt| {
                    keyed_stream(DOMAIN_POSITION, seed, i, attempt).random_range(0..=last_start)
                })
                .find(|&p| genome.sequence[p..p + span].iter().all(|&b| is_acgt(b)))
                .ok_or(Error::NoKmers)?;
            simulate_read(genome, pos, k, profile, seed, i)
        })
        .collect()
}

/// Decides, row by row, whether a stored k-mer matches a query.
#[derive(Debug, Clone, PartialEq)]
pub enum Matcher {
    /// Digital threshold on the exact Hamming distance.
    Ideal,
    /// One Monte-Carlo matchline trial per row. `params.v_evalth` is retuned
    /// per threshold so the nominal MT equals the threshold in bits.
    Analog {
        params: MatchlineParams,
        spec: VariationSpec,
    },
}

impl Matcher {
    pub fn name(&self) -> &'static str {
        match self {
            Matcher::Ideal => "ideal",
            Matcher::Analog { .. } => "analog",
        }
    }
}

fn check_read(read: &[u8], db: &KmerDb, threshold_bp: usize) -> Result<BitWord> {
    if read.len() != db.k {
        return Err(Error::ReadLength {
            read: read.len(),
            k: db.k,
        });
    }
    if threshold_bp > db.k {
        return Err(Error::InvalidParameter {
            name: "threshold_bp",
            reason: format!("{threshold_bp} exceeds k = {}", db.k),
        });
    }
    encode(read, db.encoding)
}

fn analog_params(
    params: &MatchlineParams,
    db: &KmerDb,
    threshold_bp: usize,
) -> Result<MatchlineParams> {
    let sized = MatchlineParams {
        word_bits: db.word_bits() as u32,
        ..params.clone()
    };
    sized.validate()?;
    crate::matchline::params_for_mt(&sized, 2 * threshold_bp as u32)
}

/// Positive iff the matcher reports at least one matching row. The analog
/// matcher draws trial `read_index * rows + row` for each row.
pub fn classify_read(
    read: &[u8],
    db: &KmerDb,
    threshold_bp: usize,
    matcher: &Matcher,
    read_index: u64,
) -> Result<bool> {
    let query = check_read(read, db, threshold_bp)?;
    match matcher {
        Matcher::Ideal => db.array.any_within(&query, 2 * threshold_bp),
        Matcher::Analog { params, spec } => {
            spec.validate()?;
            let tuned = analog_params(params, db, threshold_bp)?;
            analog_positive(&query, db, &tuned, spec, read_index)
        }
    }
}

fn analog_positive(
    query: &BitWord,
    db: &KmerDb,
    tuned: &MatchlineParams,
    spec: &VariationSpec,
    read_index: u64,
) -> Result<bool> {
    let rows = db.row_count() as u64;
    let distances = db.array.distances(query)?;
    Ok(distances.iter().enumerate().any(|(row, &d)| {
        trial(
            tuned,
            spec,
            d as u32,
            read_index.wrapping_mul(rows).wrapping_add(row as u64),
        )
        .is_match()
    }))
}

/// Exact-search baseline: ideal matcher at threshold 0.
pub fn classify_exact(read: &[u8], db: &KmerDb) -> Result<bool> {
    classify_read(read, db, 0, &Matcher::Ideal, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub label: String,
    pub expected: Expected,
    pub reads: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub threshold_bp: usize,
    pub counts: ConfusionCounts,
    /// `None` when no expected-positive reads were supplied.
    pub sensitivity: Option<f64>,
    /// `None` when no expected-negative reads were supplied.
    pub specificity: Option<f64>,
}

impl ThresholdResult {
    fn new(threshold_bp: usize, counts: ConfusionCounts) -> Self {
        Self {
            threshold_bp,
            counts,
            sensitivity: sensitivity(&counts).ok(),
            specificity: specificity(&counts).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub matcher: String,
    pub read_count: u64,
    pub samples: Vec<String>,
    /// Exact-match baseline on the same reads.
    pub exact_baseline: ThresholdResult,
    pub thresholds: Vec<ThresholdResult>,
}

fn tally(counts: &mut ConfusionCounts, expected: Expected, positive: bool) {
    match (expected, positive) {
        (Expected::Positive, true) => counts.tp += 1,
        (Expected::Positive, false) => counts.fn_ += 1,
        (Expected::Negative, false) => counts.tn += 1,
        (Expected::Negative, true) => counts.fp += 1,
    }
}

/// Classifies every read of every sample at each threshold. Read indices
/// run across samples in order and key the analog matcher's random streams.
pub fn evaluate(
    samples: &[LabeledSample],
    db: &KmerDb,
    thresholds: &[usize],
    matcher: &Matcher,
) -> Result<ClassificationReport> {
    if thresholds.is_empty() {
        return Err(Error::InvalidParameter {
            name: "thresholds",
            reason: "at least one threshold is required".into(),
        });
    }
    let reads: Vec<(Expected, &[u8])> = samples
        .iter()
        .flat_map(|s| s.reads.iter().map(move |r| (s.expected, r.as_slice())))
        .collect();
    let max_threshold = *thresholds.iter().max().expect("non-empty");
    let queries = reads
        .par_iter()
        .map(|(_, r)| check_read(r, db, max_threshold))
        .collect::<Result<Vec<BitWord>>>()?;
    // Best distance per read serves the baseline and the ideal matcher.
    let nearest: Vec<usize> = queries
        .par_iter()
        .map(|q| Ok(db.array.nearest(q)?.map_or(usize::MAX, |(_, d)| d)))
        .collect::<Result<_>>()?;

    let mut baseline = ConfusionCounts::default();
    for ((expected, _), &d) in reads.iter().zip(&nearest) {
        tally(&mut baseline, *expected, d == 0);
    }

    let mut results = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let positives: Vec<bool> = match matcher {
            Matcher::Ideal => nearest.iter().map(|&d| d <= 2 * t).collect(),
            Matcher::Analog { params, spec } => {
                spec.validate()?;
                let tuned = analog_params(params, db, t)?;
                queries
                    .par_iter()
                    .enumerate()
                    .map(|(i, q)| analog_positive(q, db, &tuned, spec, i as u64))
                    .collect::<Result<_>>()?
            }
        };
        let mut counts = ConfusionCounts::default();
        for ((expected, _), positive) in reads.iter().zip(positives) {
            tally(&mut counts, *expected, positive);
        }
        results.push(ThresholdResult::new(t, counts));
    }

    Ok(ClassificationReport {
        matcher: matcher.name().to_string(),
        read_count: reads.len() as u64,
        samples: samples.iter().map(|s| s.label.clone()).collect(),
        exact_baseline: ThresholdResult::new(0, baseline),
        thresholds: results,
    })
}
