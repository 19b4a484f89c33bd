//! Parallel trial runner and the per-trial CSV format.
//!
//! CSV columns: `scheme, condition, trial, n_bits, ber, ter, outcome_kind, seed`.
//! `ber` is empty for failed decodes. Rows are always in trial order, so the
//! file does not depend on the number of threads.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use sonolink_core::channel::ChannelConfig;
use sonolink_core::eval::{compute_per, run_trial, summarize, summarize_by, SummaryStats, TrialRecord};
use sonolink_core::{OutcomeKind, SchemeId};

use crate::{Error, Result};

pub const CSV_HEADER: [&str; 8] = ["scheme", "condition", "trial", "n_bits", "ber", "ter", "outcome_kind", "seed"];

/// Runs `n` trials on `threads` worker threads (all cores when `None`).
pub fn run_trials_parallel(
    scheme: SchemeId,
    channel: &ChannelConfig,
    n: usize,
    payload_bits: usize,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<Vec<TrialRecord>> {
    if n == 0 {
        return Err(sonolink_core::Error::InvalidParameter("trial count must be at least 1".into()).into());
    }
    let modem = scheme.modem();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Format(format!("thread pool: {e}")))?;
    let records: sonolink_core::Result<Vec<TrialRecord>> = pool.install(|| {
        (0..n).into_par_iter().map(|i| run_trial(modem.as_ref(), channel, payload_bits, master_seed, i)).collect()
    });
    Ok(records?)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub scheme: SchemeId,
    pub condition: String,
    pub trial: usize,
    pub n_bits: usize,
    pub ber: Option<f64>,
    pub ter: f64,
    pub outcome_kind: OutcomeKind,
    pub seed: u64,
}

impl From<&TrialRecord> for TrialRow {
    fn from(r: &TrialRecord) -> Self {
        Self {
            scheme: r.scheme,
            condition: r.condition.clone(),
            trial: r.trial,
            n_bits: r.n_bits(),
            ber: r.ber,
            ter: r.ter,
            outcome_kind: r.outcome.kind(),
            seed: r.seed,
        }
    }
}

pub fn write_trials_csv<W: Write>(rows: &[TrialRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.to_string(),
            r.condition.clone(),
            r.trial.to_string(),
            r.n_bits.to_string(),
            r.ber.map(|b| b.to_string()).unwrap_or_default(),
            r.ter.to_string(),
            r.outcome_kind.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trials_csv<R: Read>(input: R) -> Result<Vec<TrialRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Format(format!("unexpected trial CSV header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let bad = |line: u64, what: &str| Error::Format(format!("trial CSV row {line}: bad {what}"));
    rd.records()
        .map(|rec| {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let f = |i: usize| rec.get(i).unwrap_or("");
            Ok(TrialRow {
                scheme: f(0).parse().map_err(|_| bad(line, "scheme"))?,
                condition: f(1).to_string(),
                trial: f(2).parse().map_err(|_| bad(line, "trial"))?,
                n_bits: f(3).parse().map_err(|_| bad(line, "n_bits"))?,
                ber: match f(4) {
                    "" => None,
                    v => Some(v.parse().map_err(|_| bad(line, "ber"))?),
                },
                ter: f(5).parse().map_err(|_| bad(line, "ter"))?,
                outcome_kind: OutcomeKind::parse(f(6)).ok_or_else(|| bad(line, "outcome_kind"))?,
                seed: f(7).parse().map_err(|_| bad(line, "seed"))?,
            })
        })
        .collect()
}

/// TER statistics per (scheme, condition).
pub fn summarize_rows(rows: &[TrialRow]) -> BTreeMap<(SchemeId, String), SummaryStats> {
    summarize_by(rows.iter().map(|r| ((r.scheme, r.condition.clone()), r.ter)))
}

/// Grouped TER statistics and PER as CSV.
pub fn write_summary_csv<W: Write>(rows: &[TrialRow], out: W) -> Result<()> {
    let mut groups: BTreeMap<(SchemeId, &str), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.scheme, r.condition.as_str())).or_default().push(r.ter);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "condition", "count", "mean_ter", "stderr", "median", "p25", "p75", "per"])?;
    for ((scheme, condition), ters) in groups {
        let s = summarize(&ters)?;
        w.write_record([
            scheme.to_string(),
            condition.to_string(),
            s.count.to_string(),
            s.mean.to_string(),
            s.stderr.to_string(),
            s.median.to_string(),
            s.p25.to_string(),
            s.p75.to_string(),
            compute_per(&ters)?.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
