// SPDX-License-Identifier: Apache-2.0

//! Behavioral matchline model.
//!
//! A row's matchline is precharged to `v_dd` and discharged through every
//! mismatching cell in series with the evaluation transistor. The voltage
//! sampled at `t_eval` is compared against `v_evalth`; the largest mismatch
//! count that still samples at or above the threshold is the row's nominal
//! mismatch threshold (MT).
//!
//! The default discharge law is a stretched exponential in the product of
//! mismatch weight and time,
//!
//! ```text
//! V(m, t) = v_dd * exp(-(m * t / tau)^beta)
//! tau     = tau_ref * (word_bits / cap_ref_bits) * exp(-(v_eval - v_eval_ref) / slope_s)
//! ```
//!
//! so matchline capacitance grows with row length and gate drive shortens
//! the time constant.

use serde::Serialize;

use crate::error::{Error, Result};

/// `v_eval` within this margin of `v_dd` selects ideal binary CAM behavior.
pub const EXACT_MODE_MARGIN: f64 = 1e-3;

/// Bitcell area of a conventional NOR CAM cell, um^2 (65 nm).
pub const CAM_BITCELL_AREA_UM2: f64 = 4.96;
/// Bitcell area of the HD-CAM cell with its extra evaluation transistor, um^2.
pub const HDCAM_BITCELL_AREA_UM2: f64 = 5.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Match,
    Mismatch,
}

impl Decision {
    pub fn is_match(self) -> bool {
        self == Decision::Match
    }
}

/// Functional form of the discharge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LawKind {
    /// `v_dd * exp(-(x)^beta)` with `x = m * t / tau`.
    StretchedExponential,
    /// Constant-current discharge `v_dd * max(0, 1 - x)`; `beta` is ignored.
    LinearCurrent,
    /// Piecewise-linear `(x, V / v_dd)` samples, `x` strictly increasing from
    /// 0 and fractions non-increasing from 1. Held flat past the last point.
    UserTable(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DischargeLaw {
    pub kind: LawKind,
    /// Time constant at `v_eval_ref` and `cap_ref_bits`, seconds.
    pub tau_ref: f64,
    pub beta: f64,
    pub v_eval_ref: f64,
    /// Volts of `v_eval` per e-fold of conductance.
    pub slope_s: f64,
    pub cap_ref_bits: u32,
}

impl Default for DischargeLaw {
    /// Stretched exponential anchored on the reference 60 % and 15 % V_DD
    /// thresholds (49 and 155 bits on a 256-bit word at `v_eval` = 0.60 V).
    fn default() -> Self {
        Self {
            kind: LawKind::StretchedExponential,
            tau_ref: 88.4e-9,
            beta: 1.14,
            v_eval_ref: 0.60,
            slope_s: 0.12,
            cap_ref_bits: 256,
        }
    }
}

impl DischargeLaw {
    pub fn validate(&self) -> Result<()> {
        positive("tau_ref", self.tau_ref)?;
        positive("beta", self.beta)?;
        positive("slope_s", self.slope_s)?;
        if !self.v_eval_ref.is_finite() {
            return Err(invalid("v_eval_ref", "must be finite"));
        }
        if self.cap_ref_bits == 0 {
            return Err(invalid("cap_ref_bits", "must be positive"));
        }
        if let LawKind::UserTable(points) = &self.kind {
            if points.len() < 2 {
                return Err(invalid("law table", "needs at least 2 points"));
            }
            if points[0] != (0.0, 1.0) {
                return Err(invalid("law table", "must start at (0, 1)"));
            }
            for w in points.windows(2) {
                if !(w[1].0 > w[0].0) || w[1].1 > w[0].1 || w[1].1 < 0.0 {
                    return Err(invalid(
                        "law table",
                        "x must increase and V/v_dd must be non-increasing in [0, 1]",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Fraction of `v_dd` left on the line at normalized discharge `x`.
    fn remaining_fraction(&self, x: f64) -> f64 {
        match &self.kind {
            LawKind::StretchedExponential => (-x.powf(self.beta)).exp(),
            LawKind::LinearCurrent => (1.0 - x).max(0.0),
            LawKind::UserTable(points) => {
                let i = points.partition_point(|p| p.0 <= x);
                if i >= points.len() {
                    return points[points.len() - 1].1;
                }
                let (x0, f0) = points[i - 1];
                let (x1, f1) = points[i];
                f0 + (f1 - f0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

/// Evaluation settings of one matchline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchlineParams {
    pub v_dd: f64,
    pub v_eval: f64,
    pub v_evalth: f64,
    /// Seconds.
    pub t_eval: f64,
    /// Seconds.
    pub precharge_time: f64,
    pub word_bits: u32,
    pub law: DischargeLaw,
}

impl Default for MatchlineParams {
    fn default() -> Self {
        Self {
            v_dd: 1.2,
            v_eval: 0.60,
            v_evalth: 0.60 * 1.2,
            t_eval: 1e-9,
            precharge_time: 1e-9,
            word_bits: 256,
            law: DischargeLaw::default(),
        }
    }
}

impl MatchlineParams {
    pub fn validate(&self) -> Result<()> {
        positive("v_dd", self.v_dd)?;
        if !(self.v_evalth > 0.0 && self.v_evalth < self.v_dd) {
            return Err(invalid("v_evalth", "must lie strictly between 0 and v_dd"));
        }
        if !(self.v_eval > 0.0 && self.v_eval <= self.v_dd) {
            return Err(invalid("v_eval", "must lie in (0, v_dd]"));
        }
        positive("t_eval", self.t_eval)?;
        positive("precharge_time", self.precharge_time)?;
        if self.word_bits == 0 {
            return Err(invalid("word_bits", "must be positive"));
        }
        self.law.validate()
    }

    /// Full gate drive: the row behaves as an exact-match CAM.
    pub fn is_exact_mode(&self) -> bool {
        self.v_eval >= self.v_dd - EXACT_MODE_MARGIN
    }

    /// Effective discharge time constant for this word width and `v_eval`.
    pub fn tau(&self) -> f64 {
        let law = &self.law;
        law.tau_ref
            * (self.word_bits as f64 / law.cap_ref_bits as f64)
            * (-(self.v_eval - law.v_eval_ref) / law.slope_s).exp()
    }

    pub fn with_v_evalth_fraction(mut self, fraction: f64) -> Self {
        self.v_evalth = fraction * self.v_dd;
        self
    }
}

/// Matchline voltage after discharging for `t` seconds through mismatch
/// weight `m_eff` (the sum of per-cell conductance multipliers).
pub fn ml_voltage(m_eff: f64, params: &MatchlineParams, t: f64) -> Result<f64> {
    if m_eff.is_nan() || m_eff < 0.0 {
        return Err(Error::NegativeInput {
            name: "m_eff",
            value: m_eff,
        });
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeInput {
            name: "t",
            value: t,
        });
    }
    if m_eff == 0.0 || t == 0.0 {
        return Ok(params.v_dd);
    }
    if params.is_exact_mode() {
        return Ok(0.0);
    }
    let x = m_eff * t / params.tau();
    Ok(params.v_dd * params.law.remaining_fraction(x))
}

/// Sense-amplifier decision; a tie resolves to `Match`.
pub fn decide(v_ml: f64, v_evalth: f64) -> Decision {
    if v_ml >= v_evalth {
        Decision::Match
    } else {
        Decision::Mismatch
    }
}

fn nominal_decision(m: u32, params: &MatchlineParams) -> bool {
    let v = ml_voltage(m as f64, params, params.t_eval).expect("non-negative inputs");
    decide(v, params.v_evalth).is_match()
}

/// Largest mismatch count (capped at the word width) that still samples at or
/// above `v_evalth` at `t_eval`.
pub fn nominal_mt(params: &MatchlineParams) -> u32 {
    if params.is_exact_mode() {
        return 0;
    }
    // Invariant: nominal_decision(lo) holds, nominal_decision(hi + 1) fails
    // or hi == word_bits.
    let (mut lo, mut hi) = (0u32, params.word_bits);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if nominal_decision(mid, params) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Returns `params` with `v_evalth` placed halfway between the sampled
/// voltages at `target_mt` and `target_mt + 1` mismatches, so that
/// [`nominal_mt`] equals `target_mt`.
pub fn params_for_mt(params: &MatchlineParams, target_mt: u32) -> Result<MatchlineParams> {
    if target_mt >= params.word_bits {
        return Err(invalid(
            "target_mt",
            format!("must be below the word width {}", params.word_bits),
        ));
    }
    let upper = ml_voltage(target_mt as f64, params, params.t_eval)?;
    let lower = ml_voltage(target_mt as f64 + 1.0, params, params.t_eval)?;
    let mut tuned = params.clone();
    tuned.v_evalth = 0.5 * (upper + lower);
    if !(upper > lower) || !(tuned.v_evalth > 0.0) || nominal_mt(&tuned) != target_mt {
        return Err(invalid(
            "target_mt",
            format!("MT {target_mt} is not reachable by v_evalth at these settings"),
        ));
    }
    Ok(tuned)
}

/// One row of a mismatch-threshold calibration table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationPoint {
    /// `v_evalth / v_dd`.
    pub fraction: f64,
    pub mt: u32,
}

/// MT levels versus `v_evalth` of the reference threshold sweep
/// (256-bit word, TT corner).
pub const REFERENCE_MT_TABLE: [CalibrationPoint; 16] = {
    const fn p(fraction: f64, mt: u32) -> CalibrationPoint {
        CalibrationPoint { fraction, mt }
    }
    [
        p(0.90, 13),
        p(0.85, 18),
        p(0.80, 24),
        p(0.75, 30),
        p(0.70, 37),
        p(0.65, 43),
        p(0.60, 49),
        p(0.55, 56),
        p(0.50, 63),
        p(0.45, 70),
        p(0.40, 78),
        p(0.35, 86),
        p(0.30, 95),
        p(0.25, 108),
        p(0.20, 127),
        p(0.15, 155),
    ]
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResidual {
    pub fraction: f64,
    pub target_mt: u32,
    /// MT predicted by the fitted law: the continuous crossing less the
    /// half-bit centering offset.
    pub model_mt: f64,
    /// Integer MT the fitted law actually produces.
    pub nominal_mt: u32,
    /// `(model_mt - target_mt) / target_mt`.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub law: DischargeLaw,
    pub residuals: Vec<CalibrationResidual>,
}

impl Calibration {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.relative_residual.abs())
            .fold(0.0, f64::max)
    }
}

/// Least-squares fit of the stretched-exponential law to `(v_evalth, MT)`
/// pairs. Inverting the law gives
/// `ln m = ln(tau / t_eval) + (1 / beta) * ln ln(v_dd / v_evalth)`, which is
/// linear, so ordinary least squares in that space yields `(tau, beta)`.
/// An integer MT only says the continuous crossing `m` lies in
/// `[MT, MT + 1)`, so each point is fitted at `m = MT + 0.5`.
/// `tau` is then referred back to `tau_ref` using the skeleton's word width
/// and `v_eval`.
pub fn calibrate(points: &[CalibrationPoint], skeleton: &MatchlineParams) -> Result<Calibration> {
    if points.len() < 2 {
        return Err(Error::Underdetermined(points.len()));
    }
    skeleton.validate()?;
    if skeleton.is_exact_mode() {
        return Err(Error::BadCalibrationTable(
            "skeleton is in exact-match mode".into(),
        ));
    }
    let mut sorted = points.to_vec();
    for p in &sorted {
        if !(p.fraction > 0.0 && p.fraction < 1.0) {
            return Err(Error::BadCalibrationTable(format!(
                "threshold fraction {} outside (0, 1)",
                p.fraction
            )));
        }
        if p.mt == 0 {
            return Err(Error::BadCalibrationTable(
                "MT of 0 has no logarithm".into(),
            ));
        }
    }
    sorted.sort_by(|a, b| a.fraction.total_cmp(&b.fraction));
    for w in sorted.windows(2) {
        if w[0].fraction == w[1].fraction {
            return Err(Error::BadCalibrationTable(format!(
                "duplicate threshold fraction {}",
                w[0].fraction
            )));
        }
        if w[1].mt > w[0].mt {
            return Err(Error::BadCalibrationTable(format!(
                "MT must not grow with v_evalth ({} at {} vs {} at {})",
                w[0].mt, w[0].fraction, w[1].mt, w[1].fraction
            )));
        }
    }

    let xs: Vec<f64> = sorted
        .iter()
        .map(|p| (1.0 / p.fraction).ln().ln())
        .collect();
    let ys: Vec<f64> = sorted.iter().map(|p| (p.mt as f64 + 0.5).ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::BadCalibrationTable(
            "MT does not vary with v_evalth".into(),
        ));
    }
    let intercept = y_mean - slope * x_mean;

    let tau_eff = skeleton.t_eval * intercept.exp();
    let mut unit = skeleton.clone();
    unit.law.kind = LawKind::StretchedExponential;
    unit.law.tau_ref = 1.0;
    let law = DischargeLaw {
        kind: LawKind::StretchedExponential,
        tau_ref: tau_eff / unit.tau(),
        beta: 1.0 / slope,
        ..skeleton.law.clone()
    };

    let mut fitted = skeleton.clone();
    fitted.law = law.clone();
    let residuals = points
        .iter()
        .map(|p| {
            let x = (1.0 / p.fraction).ln().ln();
            let model_mt = (intercept + slope * x).exp() - 0.5;
            let at = fitted.clone().with_v_evalth_fraction(p.fraction);
            CalibrationResidual {
                fraction: p.fraction,
                target_mt: p.mt,
                model_mt,
                nominal_mt: nominal_mt(&at),
                relative_residual: (model_mt - p.mt as f64) / p.mt as f64,
            }
        })
        .collect();
    Ok(Calibration { law, residuals })
}

/// Energy per bit per search, femtojoules, for a 256-bit word at TT.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTable {
    pub v_dd: f64,
    pub word_bits: u32,
    pub v_evals: [f64; 3],
    pub mismatching_bits: [u32; 6],
    /// `values[i][j]` is the energy at `v_evals[i]` and `mismatching_bits[j]`.
    pub values: [[f64; 6]; 3],
    pub exact_match_energy: f64,
}

impl Default for EnergyTable {
    fn default() -> Self {
        Self {
            v_dd: 1.2,
            word_bits: 256,
            v_evals: [0.4, 0.5, 0.6],
            mismatching_bits: [1, 16, 32, 64, 96, 128],
            values: [
                [0.406, 0.445, 0.486, 0.566, 0.643, 0.717],
                [0.408, 0.471, 0.530, 0.614, 0.688, 0.762],
                [0.413, 0.507, 0.545, 0.618, 0.692, 0.765],
            ],
            exact_match_energy: 0.404,
        }
    }
}

/// Bilinear interpolation over the energy grid. Mismatch counts outside the
/// tabulated range are clamped; `v_eval` outside it is an error unless it
/// selects exact-match mode.
pub fn energy_per_bit(v_eval: f64, mismatching_bits: u32, table: &EnergyTable) -> Result<f64> {
    if v_eval >= table.v_dd - EXACT_MODE_MARGIN {
        return Ok(table.exact_match_energy);
    }
    let (v_lo, v_hi) = (table.v_evals[0], table.v_evals[table.v_evals.len() - 1]);
    if !(v_eval >= v_lo - 1e-12 && v_eval <= v_hi + 1e-12) {
        return Err(Error::EnergyOutOfModel { v_eval });
    }
    if mismatching_bits > table.word_bits {
        return Err(Error::TooManyMismatches {
            bits: mismatching_bits,
            word_bits: table.word_bits,
        });
    }
    let v = v_eval.clamp(v_lo, v_hi);
    let (i, wv) = bracket(&table.v_evals, v);
    let axis: Vec<f64> = table.mismatching_bits.iter().map(|&b| b as f64).collect();
    let b = (mismatching_bits as f64).clamp(axis[0], axis[axis.len() - 1]);
    let (j, wb) = bracket(&axis, b);
    let row = |r: usize| lerp(table.values[r][j], table.values[r][j + 1], wb);
    Ok(lerp(row(i), row(i + 1), wv))
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    if w == 0.0 {
        a
    } else if w == 1.0 {
        b
    } else {
        (1.0 - w) * a + w * b
    }
}

/// Lower cell index and weight of `x` within a sorted axis; `x` must lie in
/// range.
fn bracket(axis: &[f64], x: f64) -> (usize, f64) {
    let i = axis
        .partition_point(|&a| a <= x)
        .saturating_sub(1)
        .min(axis.len() - 2);
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Throughput {
    pub searches_per_second: f64,
    pub bit_compares_per_second: f64,
}

/// Pipelined precharge/evaluate throughput: one search per
/// `precharge_time + t_eval`. The cycle is rounded to whole femtoseconds
/// first so round nanosecond figures divide exactly.
pub fn throughput(params: &MatchlineParams, array_rows: u64) -> Throughput {
    let cycle_fs = ((params.precharge_time + params.t_eval) * 1e15).round();
    let searches_per_second = 1e15 / cycle_fs;
    Throughput {
        searches_per_second,
        bit_compares_per_second: searches_per_second * array_rows as f64 * params.word_bits as f64,
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be positive and finite"))
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at_fraction(fraction: f64) -> MatchlineParams {
        MatchlineParams::default().with_v_evalth_fraction(fraction)
    }

    fn exact_mode() -> MatchlineParams {
        MatchlineParams {
            v_eval: 1.2,
            ..MatchlineParams::default()
        }
    }

    #[test]
    fn no_mismatch_keeps_line_high() {
        for t in [0.0, 1e-9, 5e-9] {
            assert_eq!(
                ml_voltage(0.0, &MatchlineParams::default(), t).unwrap(),
                1.2
            );
            assert_eq!(ml_voltage(0.0, &exact_mode(), t).unwrap(), 1.2);
        }
    }

    #[test]
    fn exact_mode_fully_discharges() {
        assert_eq!(ml_voltage(1.0, &exact_mode(), 1e-9).unwrap(), 0.0);
        assert_eq!(nominal_mt(&exact_mode()), 0);
        let near = MatchlineParams {
            v_eval: 1.2 - 0.5e-3,
            ..MatchlineParams::default()
        };
        assert!(near.is_exact_mode());
    }

    #[test]
    fn product_symmetry_with_unit_beta() {
        let mut p = MatchlineParams::default();
        p.law.beta = 1.0;
        for m in [1.0, 7.0, 40.0] {
            let a = ml_voltage(m, &p, 1e-9).unwrap();
            let b = ml_voltage(2.0 * m, &p, 0.5e-9).unwrap();
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn negative_inputs_rejected() {
        let p = MatchlineParams::default();
        assert!(matches!(
            ml_voltage(-1.0, &p, 1e-9),
            Err(Error::NegativeInput { name: "m_eff", .. })
        ));
        assert!(matches!(
            ml_voltage(1.0, &p, -1e-9),
            Err(Error::NegativeInput { name: "t", .. })
        ));
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide(1.2, 0.72), Decision::Match);
        assert_eq!(decide(0.0, 0.1), Decision::Mismatch);
        assert_eq!(decide(0.72, 0.72), Decision::Match);
    }

    #[test]
    fn default_law_hits_reference_anchors() {
        assert_eq!(nominal_mt(&at_fraction(0.60)), 49);
        assert_eq!(nominal_mt(&at_fraction(0.15)), 155);
    }

    #[test]
    fn nominal_mt_agrees_with_exhaustive_scan() {
        for fraction in [0.15, 0.3, 0.45, 0.6, 0.75, 0.9] {
            let p = at_fraction(fraction);
            let scan = (0..=p.word_bits)
                .take_while(|&m| ml_voltage(m as f64, &p, p.t_eval).unwrap() >= p.v_evalth)
                .last()
                .unwrap();
            assert_eq!(nominal_mt(&p), scan);
        }
    }

    #[test]
    fn single_bit_discharging_below_threshold_gives_zero() {
        let p = MatchlineParams {
            v_eval: 1.1,
            ..at_fraction(0.9)
        };
        assert!(ml_voltage(1.0, &p, p.t_eval).unwrap() < p.v_evalth);
        assert_eq!(nominal_mt(&p), 0);
    }

    #[test]
    fn nominal_mt_capped_at_word_width() {
        let mut p = at_fraction(0.05);
        p.word_bits = 16;
        p.law.cap_ref_bits = 16;
        assert_eq!(nominal_mt(&p), 16);
    }

    #[test]
    fn params_for_mt_hits_target() {
        let base = MatchlineParams::default();
        for target in [0, 1, 2, 49, 70, 155, 255] {
            let tuned = params_for_mt(&base, target).unwrap();
            assert_eq!(nominal_mt(&tuned), target);
        }
        assert!(params_for_mt(&base, 256).is_err());
        assert!(params_for_mt(&exact_mode(), 3).is_err());
        assert_eq!(nominal_mt(&params_for_mt(&exact_mode(), 0).unwrap()), 0);
    }

    #[test]
    fn validation_rejects_bad_params() {
        let bad = [
            MatchlineParams {
                v_evalth: 1.2,
                ..MatchlineParams::default()
            },
            MatchlineParams {
                v_eval: 1.3,
                ..MatchlineParams::default()
            },
            MatchlineParams {
                t_eval: 0.0,
                ..MatchlineParams::default()
            },
            MatchlineParams {
                precharge_time: -1.0,
                ..MatchlineParams::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
        let mut p = MatchlineParams::default();
        p.law.beta = 0.0;
        assert!(p.validate().is_err());
        assert!(MatchlineParams::default().validate().is_ok());
    }

    #[test]
    fn linear_and_table_laws() {
        let mut p = MatchlineParams::default();
        p.law.kind = LawKind::LinearCurrent;
        let tau = p.tau();
        let half = ml_voltage(1.0, &p, 0.5 * tau).unwrap();
        assert!((half - 0.6).abs() < 1e-12);
        assert_eq!(ml_voltage(1.0, &p, 2.0 * tau).unwrap(), 0.0);

        p.law.kind = LawKind::UserTable(vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)]);
        p.validate().unwrap();
        let v = ml_voltage(1.5, &p, tau).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
        assert_eq!(ml_voltage(5.0, &p, tau).unwrap(), 0.0);

        p.law.kind = LawKind::UserTable(vec![(0.0, 1.0), (1.0, 1.1)]);
        assert!(p.validate().is_err());
    }

    /// Threshold fraction at which the law's continuous crossing sits at
    /// `mt + 0.5` mismatches (independent closed form).
    fn synthetic_point(tau: f64, beta: f64, mt: u32) -> CalibrationPoint {
        let x = (mt as f64 + 0.5) * 1e-9 / tau;
        CalibrationPoint {
            fraction: (-x.powf(beta)).exp(),
            mt,
        }
    }

    #[test]
    fn calibration_recovers_noiseless_law() {
        let (tau, beta) = (73.0e-9, 1.31);
        let points = [
            synthetic_point(tau, beta, 20),
            synthetic_point(tau, beta, 90),
        ];
        let cal = calibrate(&points, &MatchlineParams::default()).unwrap();
        assert!(((cal.law.tau_ref - tau) / tau).abs() < 1e-6);
        assert!(((cal.law.beta - beta) / beta).abs() < 1e-6);
        assert!(cal.max_abs_residual() < 1e-9);
    }

    #[test]
    fn calibration_refers_tau_to_reference_point() {
        let (tau, beta) = (50.0e-9, 0.9);
        let skeleton = MatchlineParams {
            v_eval: 0.5,
            word_bits: 128,
            ..MatchlineParams::default()
        };
        let points: Vec<_> = [5, 30, 60]
            .iter()
            .map(|&m| synthetic_point(tau, beta, m))
            .collect();
        let cal = calibrate(&points, &skeleton).unwrap();
        let mut fitted = skeleton.clone();
        fitted.law = cal.law;
        assert!(((fitted.tau() - tau) / tau).abs() < 1e-9);
    }

    #[test]
    fn calibration_round_trips_synthetic_tables() {
        for (tau, beta) in [(60e-9, 1.0), (88.4e-9, 1.14), (120e-9, 0.8)] {
            let mts = [10, 25, 40, 60, 90, 130];
            let points: Vec<_> = mts.iter().map(|&m| synthetic_point(tau, beta, m)).collect();
            let cal = calibrate(&points, &MatchlineParams::default()).unwrap();
            for r in &cal.residuals {
                assert_eq!(r.nominal_mt, r.target_mt, "tau {tau} beta {beta}");
            }
        }
    }

    #[test]
    fn calibration_of_reference_table() {
        let cal = calibrate(&REFERENCE_MT_TABLE, &MatchlineParams::default()).unwrap();
        assert_eq!(cal.residuals.len(), 16);
        // Offline numpy regression of ln(MT + 0.5) on the same 16 points:
        // tau 85.53 ns, beta 1.2088, worst nominal MT 145 vs 155.
        assert!((cal.law.beta - 1.2088).abs() < 1e-3, "{}", cal.law.beta);
        assert!(
            (cal.law.tau_ref - 85.53e-9).abs() < 0.01e-9,
            "{}",
            cal.law.tau_ref
        );
        assert!(cal.max_abs_residual() <= 0.12);
        for r in &cal.residuals {
            let err = r.nominal_mt.abs_diff(r.target_mt) as f64;
            assert!(err <= (0.12 * r.target_mt as f64).max(2.0), "{r:?}");
        }
    }

    #[test]
    fn calibration_errors() {
        let p = MatchlineParams::default();
        assert_eq!(
            calibrate(&REFERENCE_MT_TABLE[..1], &p),
            Err(Error::Underdetermined(1))
        );
        let rising = [
            CalibrationPoint {
                fraction: 0.3,
                mt: 10,
            },
            CalibrationPoint {
                fraction: 0.6,
                mt: 20,
            },
        ];
        assert!(matches!(
            calibrate(&rising, &p),
            Err(Error::BadCalibrationTable(_))
        ));
        let dup = [
            CalibrationPoint {
                fraction: 0.3,
                mt: 10,
            },
            CalibrationPoint {
                fraction: 0.3,
                mt: 9,
            },
        ];
        assert!(calibrate(&dup, &p).is_err());
        let flat = [
            CalibrationPoint {
                fraction: 0.3,
                mt: 10,
            },
            CalibrationPoint {
                fraction: 0.6,
                mt: 10,
            },
        ];
        assert!(calibrate(&flat, &p).is_err());
    }

    #[test]
    fn energy_grid_values_are_exact() {
        let table = EnergyTable::default();
        for (i, &v) in table.v_evals.iter().enumerate() {
            for (j, &b) in table.mismatching_bits.iter().enumerate() {
                assert_eq!(energy_per_bit(v, b, &table).unwrap(), table.values[i][j]);
            }
        }
        assert_eq!(energy_per_bit(1.2, 17, &table).unwrap(), 0.404);
        assert_eq!(energy_per_bit(0.4, 128, &table).unwrap(), 0.717);
    }

    #[test]
    fn energy_interpolates_and_clamps() {
        let table = EnergyTable::default();
        // Halfway between 0.486 (32 bits) and 0.566 (64 bits).
        let e = energy_per_bit(0.4, 48, &table).unwrap();
        assert!((e - 0.526).abs() < 1e-9, "{e}");
        assert_eq!(energy_per_bit(0.4, 0, &table).unwrap(), 0.406);
        assert_eq!(energy_per_bit(0.6, 200, &table).unwrap(), 0.765);
        let mid = energy_per_bit(0.45, 1, &table).unwrap();
        assert!((mid - 0.407).abs() < 1e-12);
        assert!(matches!(
            energy_per_bit(0.3, 16, &table),
            Err(Error::EnergyOutOfModel { .. })
        ));
        assert!(energy_per_bit(0.7, 16, &table).is_err());
        assert!(energy_per_bit(0.5, 257, &table).is_err());
    }

    #[test]
    fn throughput_examples() {
        let p = MatchlineParams::default();
        assert_eq!(throughput(&p, 1).searches_per_second, 5.0e8);
        let slow = MatchlineParams {
            t_eval: 2e-9,
            precharge_time: 2e-9,
            ..MatchlineParams::default()
        };
        assert_eq!(throughput(&slow, 1).searches_per_second, 2.5e8);
        let big = throughput(&p, 29_903);
        assert!((big.bit_compares_per_second - 3.8275840e15).abs() < 1e3);
    }

    #[test]
    fn energy_is_monotone_on_a_fine_grid() {
        let table = EnergyTable::default();
        let vs: Vec<f64> = (0..=20).map(|i| 0.4 + 0.01 * i as f64).collect();
        for &v in &vs {
            let mut prev = 0.0;
            for b in 0..=256 {
                let e = energy_per_bit(v, b, &table).unwrap();
                assert!(e >= prev);
                prev = e;
            }
        }
        for b in [1, 10, 48, 100, 128] {
            let es: Vec<f64> = vs
                .iter()
                .map(|&v| energy_per_bit(v, b, &table).unwrap())
                .collect();
            assert!(es.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        }
    }

    proptest! {
        #[test]
        fn voltage_decreases_in_mismatch_and_time(
            m in 0.5f64..200.0,
            dm in 0.01f64..10.0,
            t in 0.1e-9f64..3e-9,
            dt in 0.01e-9f64..1e-9,
            v_eval in 0.35f64..0.9,
        ) {
            let p = MatchlineParams { v_eval, ..MatchlineParams::default() };
            let v = ml_voltage(m, &p, t).unwrap();
            prop_assert!(ml_voltage(m + dm, &p, t).unwrap() < v);
            prop_assert!(ml_voltage(m, &p, t + dt).unwrap() < v);
        }

        #[test]
        fn nominal_mt_orderings(
            f1 in 0.05f64..0.95,
            f2 in 0.05f64..0.95,
            v1 in 0.35f64..0.9,
            v2 in 0.35f64..0.9,
        ) {
            let (flo, fhi) = (f1.min(f2), f1.max(f2));
            prop_assert!(nominal_mt(&at_fraction(fhi)) <= nominal_mt(&at_fraction(flo)));
            let (vlo, vhi) = (v1.min(v2), v1.max(v2));
            let lo = MatchlineParams { v_eval: vlo, ..at_fraction(flo) };
            let hi = MatchlineParams { v_eval: vhi, ..at_fraction(flo) };
            prop_assert!(nominal_mt(&hi) <= nominal_mt(&lo));
            let mut prev = 0;
            for bits in [64, 128, 256, 512, 1024] {
                let p = MatchlineParams { word_bits: bits, ..at_fraction(flo) };
                let mt = nominal_mt(&p);
                prop_assert!(mt >= prev);
                prev = mt;
            }
        }

        #[test]
        fn analog_decision_equals_digital_threshold(f in 0.05f64..0.95, v_eval in 0.35f64..1.2) {
            let p = MatchlineParams { v_eval, ..at_fraction(f) };
            let mt = nominal_mt(&p);
            for d in 0..=p.word_bits {
                let v = ml_voltage(d as f64, &p, p.t_eval).unwrap();
                prop_assert_eq!(decide(v, p.v_evalth).is_match(), d <= mt);
            }
        }
    }
}
