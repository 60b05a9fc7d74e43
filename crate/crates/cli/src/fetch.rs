// SPDX-License-Identifier: Apache-2.0

//! Genome download over the NCBI E-utilities `efetch` endpoint.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::thread;
use std::time::Duration;

use hdcam_core::genomics::parse_fasta;
use hdcam_core::Genome;

use crate::error::{CliError, CliResult};

pub const DEFAULT_BASE_URL: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";

#[derive(Debug, Clone)]
pub struct FetchRequest {
    pub accession: String,
    pub base_url: String,
    /// Extra attempts after a network failure.
    pub retries: u32,
    /// Pause before every retry.
    pub delay: Duration,
    pub timeout: Duration,
}

impl FetchRequest {
    pub fn new(accession: impl Into<String>) -> Self {
        Self {
            accession: accession.into(),
            base_url: DEFAULT_BASE_URL.to_string(),
            retries: 0,
            delay: Duration::from_millis(400),
            timeout: Duration::from_secs(60),
        }
    }
}

/// Accessions are restricted to `[A-Za-z0-9._-]`.
pub fn check_accession(acc: &str) -> CliResult<()> {
    let ok = !acc.is_empty()
        && acc
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'));
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("invalid accession {acc:?}")))
    }
}

pub fn efetch_url(base_url: &str, accession: &str) -> String {
    format!(
        "{}/efetch.fcgi?db=nuccore&id={accession}&rettype=fasta&retmode=text",
        base_url.trim_end_matches('/')
    )
}

fn get_once(agent: &ureq::Agent, url: &str) -> CliResult<String> {
    let mut response = agent
        .get(url)
        .call()
        .map_err(|e| CliError::Network(format!("GET {url}: {e}")))?;
    response
        .body_mut()
        .with_config()
        .limit(1 << 30)
        .read_to_string()
        .map_err(|e| CliError::Network(format!("reading body of {url}: {e}")))
}

/// Checks that a response body is FASTA and parses it.
pub fn validate_payload(body: &str) -> CliResult<Vec<Genome>> {
    let trimmed = body.trim_start_matches('\u{feff}').trim_start();
    if trimmed.is_empty() {
        return Err(CliError::Format("empty response body".into()));
    }
    if !trimmed.starts_with('>') {
        let head: String = trimmed.chars().take(60).collect();
        return Err(CliError::Format(format!(
            "response is not FASTA (starts with {head:?})"
        )));
    }
    Ok(parse_fasta(trimmed)?)
}

/// Downloads one accession and returns the raw body with its parsed
/// records. Only network failures are retried.
pub fn fetch_fasta(req: &FetchRequest) -> CliResult<(String, Vec<Genome>)> {
    check_accession(&req.accession)?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(req.timeout))
        .build()
        .into();
    let url = efetch_url(&req.base_url, &req.accession);
    let mut attempt = 0;
    let body = loop {
        match get_once(&agent, &url) {
            Ok(body) => break body,
            Err(e) if attempt < req.retries => {
                eprintln!("warning: {e}; retrying");
                attempt += 1;
                thread::sleep(req.delay);
            }
            Err(e) => return Err(e),
        }
    };
    let genomes = validate_payload(&body)?;
    Ok((body, genomes))
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Fetches and saves; the output file is only created on success.
pub fn fetch_to_file(req: &FetchRequest, out: &Path) -> CliResult<Vec<Genome>> {
    let (body, genomes) = fetch_fasta(req)?;
    write_atomic(out, body.as_bytes())?;
    Ok(genomes)
}

/// Reads a FASTA file from disk.
pub fn read_fasta_file(path: &Path) -> CliResult<Vec<Genome>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_fasta(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}
