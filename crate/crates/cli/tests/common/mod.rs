// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn hdcam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdcam"))
        .args(args)
        .env_remove("HDCAM_BASE_URL")
        .output()
        .expect("spawn hdcam")
}

pub fn hdcam_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hdcam"));
    cmd.args(args).env_remove("HDCAM_BASE_URL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn hdcam")
}

pub fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Deterministic pseudo-random ACGT genome written as FASTA.
pub fn write_genome(path: &Path, accession: &str, len: usize, salt: u64) {
    let mut x = 0x9E37_79B9_7F4A_7C15u64 ^ salt;
    let mut seq = String::with_capacity(len + len / 70 + 1);
    for i in 0..len {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        seq.push(b"ACGT"[(x >> 33) as usize & 3] as char);
        if i % 70 == 69 {
            seq.push('\n');
        }
    }
    std::fs::write(path, format!(">{accession} synthetic\n{seq}\n")).unwrap();
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
