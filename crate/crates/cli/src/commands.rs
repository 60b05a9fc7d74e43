// SPDX-License-Identifier: Apache-2.0

//! Subcommand bodies. Each returns the exact bytes to emit so output is
//! reproducible and testable without a process boundary.

use hdcam_core::genomics::{
    build_db, evaluate, simulate_reads, Expected, LabeledSample, ThresholdResult,
};
use hdcam_core::matchline::{
    calibrate, energy_per_bit, nominal_mt, CalibrationPoint, EnergyTable, REFERENCE_MT_TABLE,
};
use hdcam_core::variation::{match_probability_curve, sens_spec_vs_hd, uncertainty_region};
use hdcam_core::{Genome, KmerDb};
use serde::Serialize;

use crate::config::{check_word_bits, ExperimentConfig, OutputFormat};
use crate::error::{CliError, CliResult};

/// A row of tabular output.
pub trait Row: Serialize {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref()
        .map_or_else(|| "NA".to_string(), ToString::to_string)
}

/// CSV with a header row and LF endings, or a pretty JSON array.
pub fn render<R: Row>(rows: &[R], format: OutputFormat) -> CliResult<Vec<u8>> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(R::HEADER)?;
            for r in rows {
                w.write_record(r.cells())?;
            }
            w.into_inner()
                .map_err(|e| CliError::Io(e.error().to_string()))
        }
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(rows)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationRow {
    pub vevalth_fraction: f64,
    pub target_mt: u32,
    pub fitted_mt: f64,
    pub nominal_mt: u32,
    pub relative_residual: f64,
    pub tau_ref_ns: f64,
    pub beta: f64,
}

impl Row for CalibrationRow {
    const HEADER: &'static [&'static str] = &[
        "vevalth_fraction",
        "target_mt",
        "fitted_mt",
        "nominal_mt",
        "relative_residual",
        "tau_ref_ns",
        "beta",
    ];
    fn cells(&self) -> Vec<String> {
        vec![
            self.vevalth_fraction.to_string(),
            self.target_mt.to_string(),
            self.fitted_mt.to_string(),
            self.nominal_mt.to_string(),
            self.relative_residual.to_string(),
            self.tau_ref_ns.to_string(),
            self.beta.to_string(),
        ]
    }
}

/// Parses a `fraction,mt` table. A header line is allowed; fractions may be
/// written as `0.6`, `60%` or `0.6xVDD`.
pub fn parse_mt_table(text: &str) -> CliResult<Vec<CalibrationPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(CliError::Format(format!(
                "table line {}: expected 2 columns, found {}",
                i + 1,
                rec.len()
            )));
        }
        let frac = rec[0].parse::<crate::config::Threshold>();
        let mt = rec[1].parse::<u32>();
        match (frac, mt) {
            (Ok(crate::config::Threshold::FractionOfVdd(f)), Ok(mt))
            | (Ok(crate::config::Threshold::Volts(f)), Ok(mt)) => {
                points.push(CalibrationPoint { fraction: f, mt })
            }
            _ if i == 0 => continue,
            _ => {
                return Err(CliError::Format(format!(
                    "table line {}: cannot parse {:?}",
                    i + 1,
                    rec.iter().collect::<Vec<_>>()
                )))
            }
        }
    }
    Ok(points)
}

/// Fits the discharge law to an MT table (the built-in reference table
/// when `table` is `None`).
pub fn run_calibrate(cfg: &ExperimentConfig, table: Option<&str>) -> CliResult<Vec<u8>> {
    let points = match table {
        Some(text) => parse_mt_table(text)?,
        None => REFERENCE_MT_TABLE.to_vec(),
    };
    let skeleton = cfg.base_params(cfg.word_bits)?;
    let fit = calibrate(&points, &skeleton)?;
    let rows: Vec<CalibrationRow> = fit
        .residuals
        .iter()
        .map(|r| CalibrationRow {
            vevalth_fraction: r.fraction,
            target_mt: r.target_mt,
            fitted_mt: r.model_mt,
            nominal_mt: r.nominal_mt,
            relative_residual: r.relative_residual,
            tau_ref_ns: fit.law.tau_ref * 1e9,
            beta: fit.law.beta,
        })
        .collect();
    render(&rows, cfg.format)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub d: u32,
    pub match_count: u64,
    pub trials: u64,
    pub match_probability: f64,
    pub design_mt: u32,
    pub metric: String,
    pub metric_value: f64,
    pub k_bound: Option<u32>,
    pub l_bound: Option<u32>,
}

impl Row for SweepRow {
    const HEADER: &'static [&'static str] = &[
        "d",
        "match_count",
        "trials",
        "match_probability",
        "design_mt",
        "metric",
        "metric_value",
        "k_bound",
        "l_bound",
    ];
    fn cells(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.match_count.to_string(),
            self.trials.to_string(),
            self.match_probability.to_string(),
            self.design_mt.to_string(),
            self.metric.clone(),
            self.metric_value.to_string(),
            opt(&self.k_bound),
            opt(&self.l_bound),
        ]
    }
}

/// Match probability against Hamming distance under the configured
/// variation. Metrics are labeled against the TT design MT.
pub fn run_sweep(cfg: &ExperimentConfig) -> CliResult<Vec<u8>> {
    let params = cfg.matchline_params()?;
    let spec = cfg.variation_spec()?;
    let d_max = cfg.d_max.unwrap_or(cfg.word_bits);
    if cfg.d_min > d_max {
        return Err(CliError::Config(format!(
            "d_min {} exceeds d_max {d_max}",
            cfg.d_min
        )));
    }
    let design_mt = nominal_mt(&params);
    let curve = match_probability_curve(&params, &spec, cfg.d_min..=d_max)?;
    let metrics = sens_spec_vs_hd(&curve, design_mt);
    let (k_bound, l_bound) = match uncertainty_region(&curve) {
        Ok(r) => (Some(r.k_bound), Some(r.l_bound)),
        Err(_) => (None, None),
    };
    let rows: Vec<SweepRow> = curve
        .points()
        .zip(metrics)
        .map(|(p, m)| SweepRow {
            d: p.d,
            match_count: p.match_count,
            trials: p.trial_count,
            match_probability: p.match_probability,
            design_mt,
            metric: m.kind.to_string(),
            metric_value: m.value,
            k_bound,
            l_bound,
        })
        .collect();
    render(&rows, cfg.format)
}

#[derive(Debug, Clone, Serialize)]
pub struct WordsizeRow {
    pub word_bits: u32,
    pub v_evalth: f64,
    pub nominal_mt: u32,
}

impl Row for WordsizeRow {
    const HEADER: &'static [&'static str] = &["word_bits", "v_evalth", "nominal_mt"];
    fn cells(&self) -> Vec<String> {
        vec![
            self.word_bits.to_string(),
            self.v_evalth.to_string(),
            self.nominal_mt.to_string(),
        ]
    }
}

/// Nominal MT at fixed voltages for each configured width.
pub fn run_wordsize(cfg: &ExperimentConfig) -> CliResult<Vec<u8>> {
    let mut rows = Vec::with_capacity(cfg.widths.len());
    for &w in &cfg.widths {
        check_word_bits(w)?;
        let p = cfg.base_params(w)?;
        rows.push(WordsizeRow {
            word_bits: w,
            v_evalth: p.v_evalth,
            nominal_mt: nominal_mt(&p),
        });
    }
    render(&rows, cfg.format)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub v_eval: f64,
    pub mismatching_bits: u32,
    pub energy_fj: f64,
}

impl Row for EnergyRow {
    const HEADER: &'static [&'static str] = &["v_eval", "mismatching_bits", "energy_fj"];
    fn cells(&self) -> Vec<String> {
        vec![
            self.v_eval.to_string(),
            self.mismatching_bits.to_string(),
            self.energy_fj.to_string(),
        ]
    }
}

/// Search energy per bit. `exact` selects exact-match mode (`v_eval = v_dd`).
pub fn run_energy(cfg: &ExperimentConfig, exact: bool) -> CliResult<Vec<u8>> {
    let table = EnergyTable {
        v_dd: cfg.v_dd,
        ..EnergyTable::default()
    };
    let v_eval = if exact { cfg.v_dd } else { cfg.v_eval };
    let rows = cfg
        .mismatching_bits
        .iter()
        .map(|&b| {
            Ok(EnergyRow {
                v_eval,
                mismatching_bits: b,
                energy_fj: energy_per_bit(v_eval, b, &table)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    render(&rows, cfg.format)
}

/// Picks one record from a FASTA file: by accession, or the only one.
pub fn select_record(genomes: Vec<Genome>, record: Option<&str>) -> CliResult<Genome> {
    match record {
        Some(acc) => genomes
            .into_iter()
            .find(|g| g.accession == acc)
            .ok_or_else(|| CliError::Format(format!("no record {acc:?} in FASTA input"))),
        None => {
            let n = genomes.len();
            let mut it = genomes.into_iter();
            match (it.next(), n) {
                (Some(g), 1) => Ok(g),
                _ => Err(CliError::Config(format!(
                    "FASTA input holds {n} records; choose one with --record"
                ))),
            }
        }
    }
}

pub fn run_build_db(cfg: &ExperimentConfig, genome: &Genome) -> CliResult<KmerDb> {
    Ok(build_db(genome, cfg.k, cfg.encoding, cfg.dedup)?)
}

/// FASTA records `>read_<i> pos=<p> sub=<s> ins=<n> del=<d>`.
pub fn run_simulate_reads(cfg: &ExperimentConfig, genome: &Genome) -> CliResult<Vec<u8>> {
    let reads = simulate_reads(genome, cfg.reads, cfg.k, &cfg.read_profile()?, cfg.seed)?;
    let mut out = Vec::with_capacity(reads.len() * (cfg.k + 48));
    for r in &reads {
        out.extend_from_slice(
            format!(
                ">read_{} pos={} sub={} ins={} del={}\n",
                r.index, r.pos, r.substitutions, r.insertions, r.deletions
            )
            .as_bytes(),
        );
        out.extend_from_slice(&r.bases);
        out.push(b'\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyRow {
    pub matcher: String,
    pub threshold_bp: usize,
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

impl ClassifyRow {
    fn new(matcher: &str, r: &ThresholdResult) -> Self {
        Self {
            matcher: matcher.to_string(),
            threshold_bp: r.threshold_bp,
            tp: r.counts.tp,
            fn_: r.counts.fn_,
            tn: r.counts.tn,
            fp: r.counts.fp,
            sensitivity: r.sensitivity,
            specificity: r.specificity,
        }
    }
}

impl Row for ClassifyRow {
    const HEADER: &'static [&'static str] = &[
        "matcher",
        "threshold_bp",
        "tp",
        "fn",
        "tn",
        "fp",
        "sensitivity",
        "specificity",
    ];
    fn cells(&self) -> Vec<String> {
        vec![
            self.matcher.clone(),
            self.threshold_bp.to_string(),
            self.tp.to_string(),
            self.fn_.to_string(),
            self.tn.to_string(),
            self.fp.to_string(),
            opt(&self.sensitivity),
            opt(&self.specificity),
        ]
    }
}

/// Builds a labeled sample from FASTA records.
pub fn sample(label: &str, expected: Expected, genomes: Vec<Genome>) -> LabeledSample {
    LabeledSample {
        label: label.to_string(),
        expected,
        reads: genomes.into_iter().map(|g| g.sequence).collect(),
    }
}

/// Confusion counts per threshold, preceded by the exact-match baseline.
pub fn run_classify(
    cfg: &ExperimentConfig,
    db: &KmerDb,
    samples: &[LabeledSample],
) -> CliResult<Vec<u8>> {
    let matcher = cfg.matcher_model()?;
    let report = evaluate(samples, db, &cfg.thresholds, &matcher)?;
    let mut rows = vec![ClassifyRow::new("exact", &report.exact_baseline)];
    rows.extend(
        report
            .thresholds
            .iter()
            .map(|r| ClassifyRow::new(&report.matcher, r)),
    );
    render(&rows, cfg.format)
}
