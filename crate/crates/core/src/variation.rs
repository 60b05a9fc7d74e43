// SPDX-License-Identifier: Apache-2.0

//! Monte-Carlo engine for process corners, per-cell conductance variation
//! and sampling-time jitter.
//!
//! A trial at Hamming distance `d` draws `d` lognormal conductance
//! multipliers for the mismatching cells, scales them by the corner, draws a
//! jittered sampling instant and applies the sense decision. All draws for a
//! trial come from a stream keyed on `(seed, trial_index, d)`, so curves are
//! identical for any worker count.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matchline::{decide, ml_voltage, nominal_mt, Decision, MatchlineParams};
use crate::rng::{keyed_stream, DOMAIN_TRIAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CornerKind {
    TT,
    SS,
    FF,
}

impl fmt::Display for CornerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CornerKind::TT => "TT",
            CornerKind::SS => "SS",
            CornerKind::FF => "FF",
        })
    }
}

impl FromStr for CornerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TT" => Ok(CornerKind::TT),
            "SS" => Ok(CornerKind::SS),
            "FF" => Ok(CornerKind::FF),
            _ => Err(Error::InvalidParameter {
                name: "corner",
                reason: format!("unknown corner {s:?}, expected TT, SS or FF"),
            }),
        }
    }
}

/// Process corner, modeled as a global multiplier on cell conductance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corner {
    pub kind: CornerKind,
    pub conductance_multiplier: f64,
}

impl Corner {
    pub const TT: Corner = Corner {
        kind: CornerKind::TT,
        conductance_multiplier: 1.0,
    };
    pub const FF: Corner = Corner {
        kind: CornerKind::FF,
        conductance_multiplier: 1.5,
    };
    pub const SS: Corner = Corner {
        kind: CornerKind::SS,
        conductance_multiplier: 0.67,
    };

    pub fn new(kind: CornerKind, conductance_multiplier: f64) -> Result<Self> {
        if !(conductance_multiplier > 0.0 && conductance_multiplier.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "conductance_multiplier",
                reason: "must be positive".into(),
            });
        }
        Ok(Self {
            kind,
            conductance_multiplier,
        })
    }

    /// The corner with its default multiplier.
    pub fn of(kind: CornerKind) -> Self {
        match kind {
            CornerKind::TT => Self::TT,
            CornerKind::SS => Self::SS,
            CornerKind::FF => Self::FF,
        }
    }

    /// Folds the corner into the discharge law: scaling every cell's
    /// conductance by `c` is the same as dividing the time constant by `c`.
    pub fn apply(&self, params: &MatchlineParams) -> MatchlineParams {
        let mut p = params.clone();
        p.law.tau_ref /= self.conductance_multiplier;
        p
    }
}

impl Default for Corner {
    fn default() -> Self {
        Self::TT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationSpec {
    pub corner: Corner,
    /// Standard deviation of ln(per-cell conductance multiplier).
    pub sigma_g: f64,
    /// Standard deviation of the sampling instant, seconds.
    pub sigma_t: f64,
    pub seed: u64,
    pub trials: u64,
}

impl Default for VariationSpec {
    fn default() -> Self {
        Self {
            corner: Corner::TT,
            sigma_g: 0.1,
            sigma_t: 0.0,
            seed: 0,
            trials: 1000,
        }
    }
}

impl VariationSpec {
    /// No variation at all: every trial reproduces the nominal decision.
    pub fn nominal(trials: u64) -> Self {
        Self {
            sigma_g: 0.0,
            sigma_t: 0.0,
            trials,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        Corner::new(self.corner.kind, self.corner.conductance_multiplier)?;
        if !(self.sigma_g >= 0.0 && self.sigma_g.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma_g",
                reason: "must be non-negative".into(),
            });
        }
        if !(self.sigma_t >= 0.0 && self.sigma_t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma_t",
                reason: "must be non-negative".into(),
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter {
                name: "trials",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One Monte-Carlo trial at Hamming distance `d`.
pub fn sample_trial(
    params: &MatchlineParams,
    spec: &VariationSpec,
    d: u32,
    trial_index: u64,
) -> Result<Decision> {
    params.validate()?;
    spec.validate()?;
    if d > params.word_bits {
        return Err(Error::DistanceOutOfRange {
            d,
            word_bits: params.word_bits,
        });
    }
    Ok(trial(params, spec, d, trial_index))
}

/// Inputs already validated.
pub(crate) fn trial(
    params: &MatchlineParams,
    spec: &VariationSpec,
    d: u32,
    trial_index: u64,
) -> Decision {
    if d == 0 {
        return Decision::Match;
    }
    let mut rng = keyed_stream(DOMAIN_TRIAL, spec.seed, trial_index, d as u64);
    let c = spec.corner.conductance_multiplier;
    let m_eff = if spec.sigma_g == 0.0 {
        c * d as f64
    } else {
        let cell = LogNormal::new(0.0, spec.sigma_g).expect("validated sigma_g");
        (0..d).map(|_| c * cell.sample(&mut rng)).sum()
    };
    let t = sample_time(&mut rng, params.t_eval, spec.sigma_t);
    let v = ml_voltage(m_eff, params, t).expect("non-negative by construction");
    decide(v, params.v_evalth)
}

/// Normal jitter around `t_eval`, redrawn until positive.
fn sample_time<R: Rng>(rng: &mut R, t_eval: f64, sigma_t: f64) -> f64 {
    if sigma_t == 0.0 {
        return t_eval;
    }
    let jitter = Normal::new(t_eval, sigma_t).expect("validated sigma_t");
    loop {
        let t = jitter.sample(rng);
        if t > 0.0 {
            return t;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub d: u32,
    pub match_count: u64,
    pub trial_count: u64,
    pub match_probability: f64,
}

/// Empirical match probability over a contiguous range of distances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchCurve {
    d_min: u32,
    trials: u64,
    match_counts: Vec<u64>,
}

impl MatchCurve {
    pub fn from_counts(d_min: u32, trials: u64, match_counts: Vec<u64>) -> Result<Self> {
        if match_counts.is_empty() {
            return Err(Error::EmptyRange);
        }
        if trials == 0 || match_counts.iter().any(|&c| c > trials) {
            return Err(Error::InvalidParameter {
                name: "match_counts",
                reason: "counts must lie in [0, trials] with trials >= 1".into(),
            });
        }
        Ok(Self {
            d_min,
            trials,
            match_counts,
        })
    }

    pub fn d_range(&self) -> RangeInclusive<u32> {
        self.d_min..=self.d_min + self.match_counts.len() as u32 - 1
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn probability(&self, d: u32) -> Option<f64> {
        let i = d.checked_sub(self.d_min)? as usize;
        self.match_counts
            .get(i)
            .map(|&c| c as f64 / self.trials as f64)
    }

    pub fn points(&self) -> impl Iterator<Item = CurvePoint> + '_ {
        self.match_counts
            .iter()
            .enumerate()
            .map(|(i, &c)| CurvePoint {
                d: self.d_min + i as u32,
                match_count: c,
                trial_count: self.trials,
                match_probability: c as f64 / self.trials as f64,
            })
    }
}

/// Runs `spec.trials` trials at every distance of `d_range`. Work is split
/// across the current rayon pool; the result does not depend on its size.
pub fn match_probability_curve(
    params: &MatchlineParams,
    spec: &VariationSpec,
    d_range: RangeInclusive<u32>,
) -> Result<MatchCurve> {
    params.validate()?;
    spec.validate()?;
    if d_range.is_empty() {
        return Err(Error::EmptyRange);
    }
    if *d_range.end() > params.word_bits {
        return Err(Error::DistanceOutOfRange {
            d: *d_range.end(),
            word_bits: params.word_bits,
        });
    }
    let d_min = *d_range.start();
    let counts: Vec<u64> = d_range
        .into_par_iter()
        .map(|d| {
            (0..spec.trials)
                .into_par_iter()
                .filter(|&i| trial(params, spec, d, i).is_match())
                .count() as u64
        })
        .collect();
    MatchCurve::from_counts(d_min, spec.trials, counts)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
        self.fp += other.fp;
    }
}

/// TP / (TP + FN).
pub fn sensitivity(counts: &ConfusionCounts) -> Result<f64> {
    match counts.tp + counts.fn_ {
        0 => Err(Error::UndefinedMetric {
            metric: "sensitivity",
        }),
        n => Ok(counts.tp as f64 / n as f64),
    }
}

/// TN / (TN + FP).
pub fn specificity(counts: &ConfusionCounts) -> Result<f64> {
    match counts.tn + counts.fp {
        0 => Err(Error::UndefinedMetric {
            metric: "specificity",
        }),
        n => Ok(counts.tn as f64 / n as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Sensitivity,
    Specificity,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Sensitivity => "sensitivity",
            MetricKind::Specificity => "specificity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HdMetric {
    pub d: u32,
    pub kind: MetricKind,
    pub value: f64,
}

/// Labels every distance of the curve against threshold `mt`: trials at
/// `d <= mt` should match (sensitivity), trials above should not
/// (specificity). `d == mt` counts as an expected match.
pub fn sens_spec_vs_hd(curve: &MatchCurve, mt: u32) -> Vec<HdMetric> {
    curve
        .points()
        .map(|p| {
            if p.d <= mt {
                HdMetric {
                    d: p.d,
                    kind: MetricKind::Sensitivity,
                    value: p.match_probability,
                }
            } else {
                HdMetric {
                    d: p.d,
                    kind: MetricKind::Specificity,
                    value: 1.0 - p.match_probability,
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UncertaintyRegion {
    /// Largest distance that always matched.
    pub k_bound: u32,
    /// Smallest distance above `k_bound` that never matched.
    pub l_bound: u32,
}

impl UncertaintyRegion {
    /// Number of distances with an uncertain outcome.
    pub fn width(&self) -> u32 {
        self.l_bound - self.k_bound - 1
    }
}

pub fn uncertainty_region(curve: &MatchCurve) -> Result<UncertaintyRegion> {
    let k_bound = curve
        .points()
        .filter(|p| p.match_count == p.trial_count)
        .map(|p| p.d)
        .last()
        .ok_or(Error::RegionUnbounded { missing: 1 })?;
    let l_bound = curve
        .points()
        .find(|p| p.d > k_bound && p.match_count == 0)
        .map(|p| p.d)
        .ok_or(Error::RegionUnbounded { missing: 0 })?;
    Ok(UncertaintyRegion { k_bound, l_bound })
}

/// Candidate `(v_eval, v_evalth)` settings, both in volts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompensationGrid {
    pub v_evals: Vec<f64>,
    pub v_evalths: Vec<f64>,
}

impl CompensationGrid {
    /// `v_eval` from `lo` to `hi` inclusive in `step` increments, rounded to
    /// the micro-volt so the grid values are reproducible.
    pub fn sweep(lo: f64, hi: f64, step: f64, v_evalths: Vec<f64>) -> Self {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        let v_evals = (0..=n)
            .map(|i| ((lo + step * i as f64) * 1e6).round() / 1e6)
            .collect();
        Self { v_evals, v_evalths }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Compensation {
    pub v_eval: f64,
    pub v_evalth: f64,
    pub achieved_mt: u32,
}

/// Grid point whose nominal MT under `corner` is closest to `target_mt`.
/// Ties go to the smaller `v_eval`, then the smaller `v_evalth`. Grid points
/// that do not form valid settings are skipped.
pub fn corner_compensation(
    base: &MatchlineParams,
    target_mt: u32,
    corner: &Corner,
    grid: &CompensationGrid,
) -> Result<Compensation> {
    let mut best: Option<(u32, Compensation)> = None;
    for &v_eval in &grid.v_evals {
        for &v_evalth in &grid.v_evalths {
            let settings = MatchlineParams {
                v_eval,
                v_evalth,
                ..base.clone()
            };
            if settings.validate().is_err() {
                continue;
            }
            let achieved_mt = nominal_mt(&corner.apply(&settings));
            let miss = achieved_mt.abs_diff(target_mt);
            let candidate = Compensation {
                v_eval,
                v_evalth,
                achieved_mt,
            };
            let better = match &best {
                None => true,
                Some((best_miss, b)) => {
                    (miss, v_eval, v_evalth) < (*best_miss, b.v_eval, b.v_evalth)
                }
            };
            if better {
                best = Some((miss, candidate));
            }
        }
    }
    best.map(|(_, c)| c).ok_or(Error::EmptyGrid)
}
