//! CSV and plain-text summaries of sweep records.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::config::Algorithm;
use crate::sweep::TrialRecord;
use crate::HarnessError;

pub const CSV_HEADER: &str = "m,trial,algorithm,recon_error,psnr_db,ssim,updates_used,wall_ms,alpha_hat,diverged";

#[derive(Serialize, Deserialize)]
struct CsvRow {
    m: usize,
    trial: usize,
    algorithm: Algorithm,
    recon_error: f64,
    psnr_db: f64,
    ssim: Option<f64>,
    updates_used: usize,
    wall_ms: f64,
    alpha_hat: f64,
    diverged: bool,
}

/// Floats are written in shortest round-trip form, so parsing recovers them exactly.
pub fn emit_csv(records: &[TrialRecord]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    for r in records {
        w.serialize(CsvRow {
            m: r.m,
            trial: r.trial,
            algorithm: r.algorithm,
            recon_error: r.recon_error,
            psnr_db: r.psnr_db,
            ssim: r.ssim,
            updates_used: r.updates_used,
            wall_ms: r.wall_ms,
            alpha_hat: r.alpha_hat,
            diverged: r.diverged,
        })
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Reads CSV written by [`emit_csv`]. Traces are not stored in CSV and come back empty.
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<TrialRecord>, HarnessError> {
    let mut rd = csv::Reader::from_reader(bytes);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(HarnessError::Config(format!("unexpected CSV header {:?}", header.join(","))));
    }
    rd.deserialize::<CsvRow>()
        .map(|row| {
            let r = row?;
            Ok(TrialRecord {
                m: r.m,
                trial: r.trial,
                algorithm: r.algorithm,
                recon_error: r.recon_error,
                psnr_db: r.psnr_db,
                ssim: r.ssim,
                updates_used: r.updates_used,
                wall_ms: r.wall_ms,
                alpha_hat: r.alpha_hat,
                diverged: r.diverged,
                loss_trace: Vec::new(),
                warnings: 0,
            })
        })
        .collect()
}

/// Aggregate of `recon_error` for one `(m, algorithm)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub m: usize,
    pub algorithm: Algorithm,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator); 0 for a single record.
    pub std: f64,
    pub diverged: usize,
}

pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, Algorithm), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.m, r.algorithm)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((m, algorithm), rs)| {
            let count = rs.len();
            let mean = rs.iter().map(|r| r.recon_error).sum::<f64>() / count as f64;
            let std = if count > 1 {
                (rs.iter().map(|r| (r.recon_error - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
            } else {
                0.0
            };
            let diverged = rs.iter().filter(|r| r.diverged).count();
            SummaryRow { m, algorithm, count, mean, std, diverged }
        })
        .collect()
}

/// Text table of mean ± std reconstruction error per `(m, algorithm)`.
pub fn emit_summary(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    writeln!(out, "{:>6}  {:<11} {:>6}  {:>24}  {:>8}", "m", "algorithm", "trials", "recon_error mean ± std", "diverged").unwrap();
    for row in summarize(records) {
        let cell = format!("{:.4e} ± {:.2e}", row.mean, row.std);
        writeln!(out, "{:>6}  {:<11} {:>6}  {:>24}  {:>8}", row.m, row.algorithm.name(), row.count, cell, row.diverged)
            .unwrap();
    }
    out
}
