// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use hdcam_cli::commands::{self, sample};
use hdcam_cli::config::parse_assignment;
use hdcam_cli::fetch::{self, FetchRequest, DEFAULT_BASE_URL};
use hdcam_cli::{dbfile, CliError, CliResult, ExperimentConfig};
use hdcam_core::genomics::Expected;

/// Behavioral simulator for a Hamming-distance-tolerant CAM.
#[derive(Debug, Parser)]
#[command(name = "hdcam", version)]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Set any config key; repeatable. Named flags win over --set.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
    #[command(subcommand)]
    command: Command,
}

/// Shortcuts for frequently changed config keys.
#[derive(Debug, Args)]
struct Knobs {
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    trials: Option<String>,
    #[arg(long, global = true)]
    threads: Option<String>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    word_bits: Option<String>,
    #[arg(long, global = true)]
    v_eval: Option<String>,
    /// Volts, or relative as `0.60xVDD` / `60%`.
    #[arg(long, global = true)]
    v_evalth: Option<String>,
    #[arg(long, global = true)]
    target_mt: Option<String>,
    /// TT, FF or SS.
    #[arg(long, global = true)]
    corner: Option<String>,
    #[arg(long, global = true)]
    sigma_g: Option<String>,
    #[arg(long, global = true)]
    sigma_t_ps: Option<String>,
    #[arg(long, global = true)]
    k: Option<String>,
    /// onehot4 or gray3.
    #[arg(long, global = true)]
    encoding: Option<String>,
    /// Comma-separated thresholds in bp.
    #[arg(long, global = true)]
    thresholds: Option<String>,
    /// ideal or analog.
    #[arg(long, global = true)]
    matcher: Option<String>,
    /// Number of reads to simulate.
    #[arg(long, global = true)]
    reads: Option<String>,
}

impl Knobs {
    fn assignments(&self) -> Vec<(String, String)> {
        [
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("threads", &self.threads),
            ("format", &self.format),
            ("word_bits", &self.word_bits),
            ("v_eval", &self.v_eval),
            ("v_evalth", &self.v_evalth),
            ("target_mt", &self.target_mt),
            ("corner", &self.corner),
            ("sigma_g", &self.sigma_g),
            ("sigma_t_ps", &self.sigma_t_ps),
            ("k", &self.k),
            ("encoding", &self.encoding),
            ("thresholds", &self.thresholds),
            ("matcher", &self.matcher),
            ("reads", &self.reads),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the discharge law to a mismatch-threshold table.
    Calibrate {
        /// CSV of `fraction,mt` rows; the built-in table when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Match probability and sensitivity/specificity against Hamming distance.
    Sweep,
    /// Nominal mismatch threshold for each configured word width.
    Wordsize,
    /// Search energy per bit.
    Energy {
        /// Exact-match mode (v_eval = v_dd).
        #[arg(long)]
        exact: bool,
    },
    /// Build a k-mer database file from a FASTA genome.
    BuildDb {
        #[arg(long)]
        fasta: PathBuf,
        /// Record accession, when the FASTA holds several.
        #[arg(long)]
        record: Option<String>,
    },
    /// Simulate sequencing reads from a FASTA genome.
    SimulateReads {
        #[arg(long)]
        fasta: PathBuf,
        #[arg(long)]
        record: Option<String>,
    },
    /// Classify reads against a database across thresholds.
    Classify {
        #[arg(long)]
        db: PathBuf,
        /// FASTA of reads expected to match; repeatable.
        #[arg(long)]
        positive: Vec<PathBuf>,
        /// FASTA of reads expected not to match; repeatable.
        #[arg(long)]
        negative: Vec<PathBuf>,
    },
    /// Download a genome as FASTA from NCBI efetch.
    Fetch {
        #[arg(long)]
        accession: String,
        #[arg(long, env = "HDCAM_BASE_URL", default_value = DEFAULT_BASE_URL)]
        base_url: String,
        /// Extra attempts after a network failure.
        #[arg(long, default_value_t = 0)]
        retries: u32,
        /// Pause between attempts, milliseconds.
        #[arg(long, default_value_t = 400)]
        delay_ms: u64,
        #[arg(long, default_value_t = 60)]
        timeout_s: u64,
    },
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fetch::write_atomic(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn require_out(out: Option<&Path>, what: &str) -> CliResult<PathBuf> {
    out.map(Path::to_path_buf)
        .ok_or_else(|| CliError::Config(format!("{what} needs --out")))
}

fn label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn run_command(cli: &Cli, cfg: &ExperimentConfig) -> CliResult<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Calibrate { table } => {
            let text = table.as_deref().map(read_text).transpose()?;
            emit(out, &commands::run_calibrate(cfg, text.as_deref())?)
        }
        Command::Sweep => emit(out, &commands::run_sweep(cfg)?),
        Command::Wordsize => emit(out, &commands::run_wordsize(cfg)?),
        Command::Energy { exact } => emit(out, &commands::run_energy(cfg, *exact)?),
        Command::BuildDb { fasta, record } => {
            let path = require_out(out, "build-db")?;
            let genome =
                commands::select_record(fetch::read_fasta_file(fasta)?, record.as_deref())?;
            let db = commands::run_build_db(cfg, &genome)?;
            let bytes = dbfile::to_bytes(&db).map_err(|e| CliError::Format(e.to_string()))?;
            fetch::write_atomic(&path, &bytes)?;
            eprintln!(
                "{}: {} rows of {} bits",
                path.display(),
                db.row_count(),
                db.word_bits()
            );
            Ok(())
        }
        Command::SimulateReads { fasta, record } => {
            let genome =
                commands::select_record(fetch::read_fasta_file(fasta)?, record.as_deref())?;
            emit(out, &commands::run_simulate_reads(cfg, &genome)?)
        }
        Command::Classify {
            db,
            positive,
            negative,
        } => {
            if positive.is_empty() && negative.is_empty() {
                return Err(CliError::Config(
                    "classify needs at least one --positive or --negative file".into(),
                ));
            }
            let bytes = fs::read(db).map_err(|e| CliError::Io(format!("{}: {e}", db.display())))?;
            let db = dbfile::from_bytes(&bytes)
                .map_err(|e| CliError::Format(format!("{}: {e}", db.display())))?;
            let mut samples = Vec::new();
            for (paths, expected) in [
                (positive, Expected::Positive),
                (negative, Expected::Negative),
            ] {
                for p in paths {
                    samples.push(sample(&label(p), expected, fetch::read_fasta_file(p)?));
                }
            }
            emit(out, &commands::run_classify(cfg, &db, &samples)?)
        }
        Command::Fetch {
            accession,
            base_url,
            retries,
            delay_ms,
            timeout_s,
        } => {
            let path = require_out(out, "fetch")?;
            let req = FetchRequest {
                accession: accession.clone(),
                base_url: base_url.clone(),
                retries: *retries,
                delay: Duration::from_millis(*delay_ms),
                timeout: Duration::from_secs(*timeout_s),
            };
            let genomes = fetch::fetch_to_file(&req, &path)?;
            for g in &genomes {
                eprintln!("{}: {} bp", g.accession, g.len());
            }
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let file = cli.config.as_deref().map(read_text).transpose()?;
    let mut overrides = cli
        .set
        .iter()
        .map(|s| parse_assignment(s))
        .collect::<CliResult<Vec<_>>>()?;
    overrides.extend(cli.knobs.assignments());
    let cfg = ExperimentConfig::resolve(file.as_deref(), &overrides)?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| run_command(cli, &cfg)),
        None => run_command(cli, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hdcam: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
