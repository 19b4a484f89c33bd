//! Decoding a corpus of recordings listed in a manifest and comparing the
//! error rates with reference values.
//!
//! Manifest: CSV with a header containing at least
//!
//! | column          | content                                      |
//! |-----------------|----------------------------------------------|
//! | `wav`           | recording path, relative to the manifest     |
//! | `scheme`        | `lee`, `nearby` or `priwhisper`              |
//! | `tx_bits_hex`   | transmitted bits, hex, MSB first             |
//! | `n_bits`        | number of transmitted bits                   |
//! | `reference_ber` | reference error rate, may be empty           |
//!
//! Manifests with other column names are adapted with a column map: a text
//! file of `canonical = actual` lines. Rows that cannot be processed are
//! reported with status `error`; they never abort the batch.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sonolink_core::eval::compute_ter;
use sonolink_core::{OutcomeKind, SchemeId};

use crate::bits_hex::parse_bits_hex;
use crate::wav::read_wav;
use crate::{Error, Result};

pub const MANIFEST_COLUMNS: [&str; 5] = ["wav", "scheme", "tx_bits_hex", "n_bits", "reference_ber"];

/// Deltas up to this size count as agreement.
pub const MATCH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayStatus {
    Match,
    Delta,
    NoReference,
    Error,
}

impl ReplayStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ReplayStatus::Match => "match",
            ReplayStatus::Delta => "delta",
            ReplayStatus::NoReference => "no_reference",
            ReplayStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub wav: String,
    pub scheme: String,
    pub n_bits: Option<usize>,
    pub status: ReplayStatus,
    pub outcome_kind: Option<OutcomeKind>,
    pub ber: Option<f64>,
    pub ter: Option<f64>,
    pub reference_ber: Option<f64>,
    /// `ter - reference_ber`.
    pub delta: Option<f64>,
    pub message: String,
}

impl ReplayRow {
    fn error(wav: &str, scheme: &str, message: String) -> Self {
        Self {
            wav: wav.into(),
            scheme: scheme.into(),
            n_bits: None,
            status: ReplayStatus::Error,
            outcome_kind: None,
            ber: None,
            ter: None,
            reference_ber: None,
            delta: None,
            message,
        }
    }
}

/// `canonical = actual` lines; `#` comments.
pub fn read_column_map(path: impl AsRef<Path>) -> Result<HashMap<String, String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for line in text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Format(format!("column map line `{line}`")))?;
        let k = k.trim();
        if !MANIFEST_COLUMNS.contains(&k) {
            return Err(Error::Format(format!("column map: unknown column `{k}`")));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

struct Entry {
    wav: String,
    scheme: String,
    bits_hex: String,
    n_bits: String,
    reference: String,
}

fn replay_entry(base: &Path, e: &Entry) -> ReplayRow {
    let fail = |m: String| ReplayRow::error(&e.wav, &e.scheme, m);
    let scheme: SchemeId = match e.scheme.parse() {
        Ok(s) => s,
        Err(err) => return fail(err.to_string()),
    };
    let Ok(n_bits) = e.n_bits.trim().parse::<usize>() else {
        return fail(format!("bad n_bits `{}`", e.n_bits));
    };
    let reference_ber = match e.reference.trim() {
        "" => None,
        v => match v.parse::<f64>() {
            Ok(v) => Some(v),
            Err(_) => return fail(format!("bad reference_ber `{v}`")),
        },
    };
    let tx = match parse_bits_hex(&e.bits_hex, Some(n_bits)) {
        Ok(tx) if !tx.is_empty() => tx,
        Ok(_) => return fail("empty transmitted bits".into()),
        Err(err) => return fail(err.to_string()),
    };
    let path = {
        let p = PathBuf::from(&e.wav);
        if p.is_relative() {
            base.join(p)
        } else {
            p
        }
    };
    let signal = match read_wav(&path) {
        Ok(s) => s,
        Err(err) => return fail(err.to_string()),
    };
    let outcome = scheme.modem().decode(&signal, n_bits);
    let ter = compute_ter(&tx, &outcome).expect("tx is nonempty");
    let delta = reference_ber.map(|r| ter - r);
    let status = match delta {
        None => ReplayStatus::NoReference,
        Some(d) if d.abs() <= MATCH_TOLERANCE => ReplayStatus::Match,
        Some(_) => ReplayStatus::Delta,
    };
    ReplayRow {
        wav: e.wav.clone(),
        scheme: e.scheme.clone(),
        n_bits: Some(n_bits),
        status,
        outcome_kind: Some(outcome.kind()),
        ber: outcome.bits().map(|_| ter),
        ter: Some(ter),
        reference_ber,
        delta,
        message: outcome.diagnostics().unwrap_or("").to_string(),
    }
}

/// Decodes every manifest row; the rows keep manifest order.
pub fn replay_manifest(manifest: impl AsRef<Path>, column_map: Option<&HashMap<String, String>>) -> Result<Vec<ReplayRow>> {
    let manifest = manifest.as_ref();
    let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rd = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rd.headers()?.clone();
    let column = |canonical: &str| -> Result<usize> {
        let name = column_map.and_then(|m| m.get(canonical)).map_or(canonical, String::as_str);
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("manifest has no `{name}` column")))
    };
    let idx: Vec<usize> = MANIFEST_COLUMNS.iter().map(|c| column(c)).collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(idx[i]).unwrap_or("").to_string();
        entries.push(Entry { wav: f(0), scheme: f(1), bits_hex: f(2), n_bits: f(3), reference: f(4) });
    }
    let base = manifest.parent().unwrap_or(Path::new("."));
    Ok(entries.par_iter().map(|e| replay_entry(base, e)).collect())
}

pub fn write_replay_report<W: Write>(rows: &[ReplayRow], out: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["wav", "scheme", "n_bits", "status", "outcome_kind", "ber", "ter", "reference_ber", "delta", "message"])?;
    for r in rows {
        w.write_record([
            r.wav.clone(),
            r.scheme.clone(),
            r.n_bits.map(|n| n.to_string()).unwrap_or_default(),
            r.status.as_str().to_string(),
            r.outcome_kind.map(|k| k.to_string()).unwrap_or_default(),
            opt(r.ber),
            opt(r.ter),
            opt(r.reference_ber),
            opt(r.delta),
            r.message.clone(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
