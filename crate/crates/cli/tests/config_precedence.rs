// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{hdcam, ok, p};
use hdcam_cli::config::{parse_assignment, KEYS};
use hdcam_cli::{CliError, ExperimentConfig};

/// Two valid non-default values per key: (file, flag).
fn samples(key: &str) -> (&'static str, &'static str) {
    match key {
        "word_bits" => ("128", "512"),
        "v_dd" => ("1.1", "1.3"),
        "v_eval" => ("0.5", "0.45"),
        "v_evalth" => ("0.5xVDD", "0.66"),
        "target_mt" => ("40", "70"),
        "t_eval_ns" => ("2", "0.5"),
        "precharge_ns" => ("2", "0.5"),
        "law" => ("linear", "stretched"),
        "tau_ref_ns" => ("80", "90"),
        "beta" => ("1.3", "1"),
        "v_eval_ref" => ("0.55", "0.5"),
        "slope_s" => ("0.1", "0.2"),
        "cap_ref_bits" => ("128", "512"),
        "corner" => ("FF", "SS"),
        "corner_multiplier" => ("1.4", "0.7"),
        "sigma_g" => ("0.2", "0.05"),
        "sigma_t_ps" => ("30", "100"),
        "trials" => ("50", "70"),
        "seed" => ("11", "12"),
        "d_min" => ("3", "4"),
        "d_max" => ("100", "120"),
        "widths" => ("64,128", "256"),
        "mismatching_bits" => ("1,2", "3"),
        "k" => ("32", "16"),
        "encoding" => ("gray3", "onehot4"),
        "dedup" => ("false", "true"),
        "reads" => ("10", "20"),
        "sub_rate" => ("0.01", "0.02"),
        "ins_rate" => ("0.001", "0.003"),
        "del_rate" => ("0.004", "0.005"),
        "thresholds" => ("0,4", "8"),
        "matcher" => ("analog", "ideal"),
        "format" => ("json", "csv"),
        "threads" => ("2", "3"),
        other => panic!("no sample values for {other}"),
    }
}

fn canonical(key: &str, value: &str) -> String {
    let mut c = ExperimentConfig::default();
    c.set(key, value).unwrap();
    c.get(key).unwrap()
}

#[test]
fn flag_beats_file_beats_default_for_every_key() {
    let defaults = ExperimentConfig::default();
    for &key in KEYS {
        let (file_v, flag_v) = samples(key);
        let file = format!("# experiment\n{key} = {file_v}  # trailing\n");
        let base = ExperimentConfig::resolve(None, &[]).unwrap();
        assert_eq!(base.get(key), defaults.get(key), "{key} default");
        let from_file = ExperimentConfig::resolve(Some(&file), &[]).unwrap();
        assert_eq!(
            from_file.get(key).unwrap(),
            canonical(key, file_v),
            "{key} file"
        );
        assert_ne!(
            from_file.get(key),
            defaults.get(key),
            "{key} file value is a default"
        );
        let flag = parse_assignment(&format!("{key}={flag_v}")).unwrap();
        let both = ExperimentConfig::resolve(Some(&file), &[flag]).unwrap();
        assert_eq!(both.get(key).unwrap(), canonical(key, flag_v), "{key} flag");
        assert_ne!(both.get(key), from_file.get(key), "{key} flag equals file");
    }
}

#[test]
fn unknown_keys_are_config_errors() {
    assert!(matches!(
        ExperimentConfig::resolve(Some("triles = 5\n"), &[]),
        Err(CliError::Config(_))
    ));
    assert!(matches!(
        parse_assignment("nope=1"),
        Err(CliError::Config(_))
    ));
    let out = hdcam(&["--set", "nope=1", "wordsize"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_values_are_config_errors() {
    for (k, v) in [
        ("trials", "-1"),
        ("corner", "XX"),
        ("v_evalth", "high"),
        ("threads", "0"),
    ] {
        let err = ExperimentConfig::resolve(None, &[(k.into(), v.into())]).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{k}={v}");
    }
}

#[test]
fn binary_applies_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(&cfg, "widths = 128\nv_evalth = 0.5xVDD\n").unwrap();
    let from_file = ok(&hdcam(&["--config", p(&cfg), "wordsize"]));
    assert!(
        from_file.starts_with("word_bits,v_evalth,nominal_mt\n128,0.6,"),
        "{from_file}"
    );
    let flagged = ok(&hdcam(&[
        "--config",
        p(&cfg),
        "--v-evalth",
        "0.72",
        "wordsize",
    ]));
    assert!(
        flagged.starts_with("word_bits,v_evalth,nominal_mt\n128,0.72,24\n"),
        "{flagged}"
    );
    let named_over_set = ok(&hdcam(&[
        "--config",
        p(&cfg),
        "--set",
        "v_evalth=0.3",
        "--v-evalth",
        "0.72",
        "wordsize",
    ]));
    assert_eq!(named_over_set, flagged);
}

#[test]
fn missing_config_file_is_io_error() {
    let out = hdcam(&["--config", "/nonexistent/hdcam.conf", "wordsize"]);
    assert_eq!(out.status.code(), Some(3));
}
