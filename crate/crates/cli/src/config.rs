// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration.
//!
//! A config file is plain `key = value` lines; `#` starts a comment. Every
//! key can also be given on the command line. Resolution order is command
//! line, then file, then built-in default.

use std::fmt;
use std::str::FromStr;

use hdcam_core::genomics::{Matcher, ReadErrorProfile};
use hdcam_core::matchline::{params_for_mt, DischargeLaw, LawKind, MatchlineParams};
use hdcam_core::{Corner, CornerKind, Encoding, VariationSpec};

use crate::error::{CliError, CliResult};

/// Every recognized key, in canonical order.
pub const KEYS: &[&str] = &[
    "word_bits",
    "v_dd",
    "v_eval",
    "v_evalth",
    "target_mt",
    "t_eval_ns",
    "precharge_ns",
    "law",
    "tau_ref_ns",
    "beta",
    "v_eval_ref",
    "slope_s",
    "cap_ref_bits",
    "corner",
    "corner_multiplier",
    "sigma_g",
    "sigma_t_ps",
    "trials",
    "seed",
    "d_min",
    "d_max",
    "widths",
    "mismatching_bits",
    "k",
    "encoding",
    "dedup",
    "reads",
    "sub_rate",
    "ins_rate",
    "del_rate",
    "thresholds",
    "matcher",
    "format",
    "threads",
];

/// Sense threshold, absolute or relative to the supply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Volts(f64),
    FractionOfVdd(f64),
}

impl Threshold {
    pub fn volts(self, v_dd: f64) -> f64 {
        match self {
            Threshold::Volts(v) => v,
            Threshold::FractionOfVdd(f) => f * v_dd,
        }
    }
}

impl FromStr for Threshold {
    type Err = String;

    /// `0.72` (volts), `0.60xVDD`, `0.60*VDD` or `60%`.
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        if let Some(pct) = lower.strip_suffix('%') {
            return parse_f64(pct).map(|p| Threshold::FractionOfVdd(p / 100.0));
        }
        for suffix in ["xvdd", "*vdd"] {
            if let Some(frac) = lower.strip_suffix(suffix) {
                return parse_f64(frac).map(Threshold::FractionOfVdd);
            }
        }
        parse_f64(t).map(Threshold::Volts)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Volts(v) => write!(f, "{v}"),
            Threshold::FractionOfVdd(x) => write!(f, "{x}xVDD"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawName {
    Stretched,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatcherName {
    Ideal,
    Analog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub word_bits: u32,
    pub v_dd: f64,
    pub v_eval: f64,
    pub v_evalth: Threshold,
    /// When set, `v_evalth` is retuned so the nominal MT equals this.
    pub target_mt: Option<u32>,
    pub t_eval_ns: f64,
    pub precharge_ns: f64,
    pub law: LawName,
    pub tau_ref_ns: f64,
    pub beta: f64,
    pub v_eval_ref: f64,
    pub slope_s: f64,
    pub cap_ref_bits: u32,
    pub corner: CornerKind,
    /// Overrides the corner's default conductance multiplier.
    pub corner_multiplier: Option<f64>,
    pub sigma_g: f64,
    pub sigma_t_ps: f64,
    pub trials: u64,
    pub seed: u64,
    pub d_min: u32,
    /// Defaults to `word_bits`.
    pub d_max: Option<u32>,
    pub widths: Vec<u32>,
    pub mismatching_bits: Vec<u32>,
    pub k: usize,
    pub encoding: Encoding,
    pub dedup: bool,
    pub reads: u64,
    pub sub_rate: f64,
    pub ins_rate: f64,
    pub del_rate: f64,
    pub thresholds: Vec<usize>,
    pub matcher: MatcherName,
    pub format: OutputFormat,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let law = DischargeLaw::default();
        let profile = ReadErrorProfile::default();
        let spec = VariationSpec::default();
        Self {
            word_bits: 256,
            v_dd: 1.2,
            v_eval: 0.60,
            v_evalth: Threshold::FractionOfVdd(0.60),
            target_mt: None,
            t_eval_ns: 1.0,
            precharge_ns: 1.0,
            law: LawName::Stretched,
            tau_ref_ns: law.tau_ref * 1e9,
            beta: law.beta,
            v_eval_ref: law.v_eval_ref,
            slope_s: law.slope_s,
            cap_ref_bits: law.cap_ref_bits,
            corner: CornerKind::TT,
            corner_multiplier: None,
            sigma_g: spec.sigma_g,
            sigma_t_ps: 0.0,
            trials: spec.trials,
            seed: spec.seed,
            d_min: 0,
            d_max: None,
            widths: vec![128, 256, 512],
            mismatching_bits: vec![1, 16, 32, 48, 64, 96, 128],
            k: 64,
            encoding: Encoding::OneHot4,
            dedup: true,
            reads: 1000,
            sub_rate: profile.sub_rate,
            ins_rate: profile.ins_rate,
            del_rate: profile.del_rate,
            thresholds: vec![0, 1, 2, 4, 8, 12, 16],
            matcher: MatcherName::Ideal,
            format: OutputFormat::Csv,
            threads: None,
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn parse_int<T: FromStr>(s: &str) -> Result<T, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a non-negative integer"))
}

fn parse_optional<T>(s: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, String> {
    if s.trim().eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        f(s).map(Some)
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String> {
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(parse_int)
        .collect::<Result<Vec<T>, String>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("{s:?} is not a boolean")),
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn show_optional<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref()
        .map_or_else(|| "none".to_string(), ToString::to_string)
}

impl ExperimentConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        self.set_inner(key, value)
            .map_err(|reason| CliError::Config(format!("{key}: {reason}")))
    }

    fn set_inner(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "word_bits" => self.word_bits = parse_int(v)?,
            "v_dd" => self.v_dd = parse_f64(v)?,
            "v_eval" => self.v_eval = parse_f64(v)?,
            "v_evalth" => self.v_evalth = v.parse()?,
            "target_mt" => self.target_mt = parse_optional(v, parse_int)?,
            "t_eval_ns" => self.t_eval_ns = parse_f64(v)?,
            "precharge_ns" => self.precharge_ns = parse_f64(v)?,
            "law" => {
                self.law = match v.to_ascii_lowercase().as_str() {
                    "stretched" | "stretched-exponential" => LawName::Stretched,
                    "linear" | "linear-current" => LawName::Linear,
                    _ => return Err(format!("unknown law {v:?}, expected stretched or linear")),
                }
            }
            "tau_ref_ns" => self.tau_ref_ns = parse_f64(v)?,
            "beta" => self.beta = parse_f64(v)?,
            "v_eval_ref" => self.v_eval_ref = parse_f64(v)?,
            "slope_s" => self.slope_s = parse_f64(v)?,
            "cap_ref_bits" => self.cap_ref_bits = parse_int(v)?,
            "corner" => self.corner = v.parse().map_err(|e: hdcam_core::Error| e.to_string())?,
            "corner_multiplier" => self.corner_multiplier = parse_optional(v, parse_f64)?,
            "sigma_g" => self.sigma_g = parse_f64(v)?,
            "sigma_t_ps" => self.sigma_t_ps = parse_f64(v)?,
            "trials" => self.trials = parse_int(v)?,
            "seed" => self.seed = parse_int(v)?,
            "d_min" => self.d_min = parse_int(v)?,
            "d_max" => self.d_max = parse_optional(v, parse_int)?,
            "widths" => self.widths = parse_list(v)?,
            "mismatching_bits" => self.mismatching_bits = parse_list(v)?,
            "k" => self.k = parse_int(v)?,
            "encoding" => {
                self.encoding = v.parse().map_err(|e: hdcam_core::Error| e.to_string())?
            }
            "dedup" => self.dedup = parse_bool(v)?,
            "reads" => self.reads = parse_int(v)?,
            "sub_rate" => self.sub_rate = parse_f64(v)?,
            "ins_rate" => self.ins_rate = parse_f64(v)?,
            "del_rate" => self.del_rate = parse_f64(v)?,
            "thresholds" => self.thresholds = parse_list(v)?,
            "matcher" => {
                self.matcher = match v.to_ascii_lowercase().as_str() {
                    "ideal" => MatcherName::Ideal,
                    "analog" => MatcherName::Analog,
                    _ => return Err(format!("unknown matcher {v:?}, expected ideal or analog")),
                }
            }
            "format" => {
                self.format = match v.to_ascii_lowercase().as_str() {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => return Err(format!("unknown format {v:?}, expected csv or json")),
                }
            }
            "threads" => {
                self.threads = parse_optional(v, parse_int)?;
                if self.threads == Some(0) {
                    return Err("must be at least 1".into());
                }
            }
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Current value of `key`, in a form `set` accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "word_bits" => self.word_bits.to_string(),
            "v_dd" => self.v_dd.to_string(),
            "v_eval" => self.v_eval.to_string(),
            "v_evalth" => self.v_evalth.to_string(),
            "target_mt" => show_optional(&self.target_mt),
            "t_eval_ns" => self.t_eval_ns.to_string(),
            "precharge_ns" => self.precharge_ns.to_string(),
            "law" => match self.law {
                LawName::Stretched => "stretched".into(),
                LawName::Linear => "linear".into(),
            },
            "tau_ref_ns" => self.tau_ref_ns.to_string(),
            "beta" => self.beta.to_string(),
            "v_eval_ref" => self.v_eval_ref.to_string(),
            "slope_s" => self.slope_s.to_string(),
            "cap_ref_bits" => self.cap_ref_bits.to_string(),
            "corner" => self.corner.to_string(),
            "corner_multiplier" => show_optional(&self.corner_multiplier),
            "sigma_g" => self.sigma_g.to_string(),
            "sigma_t_ps" => self.sigma_t_ps.to_string(),
            "trials" => self.trials.to_string(),
            "seed" => self.seed.to_string(),
            "d_min" => self.d_min.to_string(),
            "d_max" => show_optional(&self.d_max),
            "widths" => join(&self.widths),
            "mismatching_bits" => join(&self.mismatching_bits),
            "k" => self.k.to_string(),
            "encoding" => self.encoding.to_string(),
            "dedup" => self.dedup.to_string(),
            "reads" => self.reads.to_string(),
            "sub_rate" => self.sub_rate.to_string(),
            "ins_rate" => self.ins_rate.to_string(),
            "del_rate" => self.del_rate.to_string(),
            "thresholds" => join(&self.thresholds),
            "matcher" => match self.matcher {
                MatcherName::Ideal => "ideal".into(),
                MatcherName::Analog => "analog".into(),
            },
            "format" => self.format.to_string(),
            "threads" => show_optional(&self.threads),
            _ => return None,
        })
    }

    /// Defaults, then the file, then command-line assignments in order.
    pub fn resolve(file: Option<&str>, overrides: &[(String, String)]) -> CliResult<Self> {
        let mut cfg = Self::default();
        if let Some(text) = file {
            for (key, value) in parse_config_text(text)? {
                cfg.set(&key, &value)?;
            }
        }
        for (key, value) in overrides {
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn discharge_law(&self) -> DischargeLaw {
        DischargeLaw {
            kind: match self.law {
                LawName::Stretched => LawKind::StretchedExponential,
                LawName::Linear => LawKind::LinearCurrent,
            },
            tau_ref: self.tau_ref_ns * 1e-9,
            beta: self.beta,
            v_eval_ref: self.v_eval_ref,
            slope_s: self.slope_s,
            cap_ref_bits: self.cap_ref_bits,
        }
    }

    /// Matchline settings at `word_bits`, before any `target_mt` retuning.
    pub fn base_params(&self, word_bits: u32) -> CliResult<MatchlineParams> {
        let p = MatchlineParams {
            v_dd: self.v_dd,
            v_eval: self.v_eval,
            v_evalth: self.v_evalth.volts(self.v_dd),
            t_eval: self.t_eval_ns * 1e-9,
            precharge_time: self.precharge_ns * 1e-9,
            word_bits,
            law: self.discharge_law(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Matchline settings with `target_mt` applied.
    pub fn matchline_params(&self) -> CliResult<MatchlineParams> {
        check_word_bits(self.word_bits)?;
        let p = self.base_params(self.word_bits)?;
        match self.target_mt {
            Some(mt) => Ok(params_for_mt(&p, mt)?),
            None => Ok(p),
        }
    }

    pub fn corner_model(&self) -> CliResult<Corner> {
        Ok(match self.corner_multiplier {
            Some(m) => Corner::new(self.corner, m)?,
            None => Corner::of(self.corner),
        })
    }

    pub fn variation_spec(&self) -> CliResult<VariationSpec> {
        let spec = VariationSpec {
            corner: self.corner_model()?,
            sigma_g: self.sigma_g,
            sigma_t: self.sigma_t_ps * 1e-12,
            seed: self.seed,
            trials: self.trials,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn read_profile(&self) -> CliResult<ReadErrorProfile> {
        let p = ReadErrorProfile {
            sub_rate: self.sub_rate,
            ins_rate: self.ins_rate,
            del_rate: self.del_rate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn matcher_model(&self) -> CliResult<Matcher> {
        Ok(match self.matcher {
            MatcherName::Ideal => Matcher::Ideal,
            MatcherName::Analog => Matcher::Analog {
                params: self.base_params(self.word_bits)?,
                spec: self.variation_spec()?,
            },
        })
    }
}

/// Hardware word widths must fill whole bytes.
pub fn check_word_bits(bits: u32) -> CliResult<()> {
    if bits == 0 || !bits.is_multiple_of(8) {
        return Err(CliError::Config(format!(
            "word width {bits} is not a positive multiple of 8"
        )));
    }
    Ok(())
}

/// Splits config text into assignments. Unknown keys are rejected with
/// their line number.
pub fn parse_config_text(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "config line {}: expected key = value",
                i + 1
            )));
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "config line {}: unknown key {key:?}",
                i + 1
            )));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Parses a command-line `key=value` assignment.
pub fn parse_assignment(s: &str) -> CliResult<(String, String)> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("{s:?}: expected key=value")))?;
    let key = key.trim();
    if !KEYS.contains(&key) {
        return Err(CliError::Config(format!("unknown key {key:?}")));
    }
    Ok((key.to_string(), value.trim().to_string()))
}
