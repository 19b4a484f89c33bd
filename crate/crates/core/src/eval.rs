//! Link-layer reliability metrics and seeded trials.
//!
//! - BER compares the decoded bits with the transmitted bits. Extra decoded
//!   bits are dropped and missing ones count as errors.
//! - TER is the BER of a decoded message and 1.0 for any failure to decode.
//! - PER is the fraction of transmissions with any error.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{normalize_peak, DEFAULT_PEAK_DBFS};
use crate::channel::{apply_channel, ChannelConfig};
use crate::scheme::{Modem, SchemeId};
use crate::{BitMessage, DecodeOutcome, Error, Result};

/// Silence around each transmission before the channel, in seconds.
pub const TRIAL_PADDING_S: f64 = 0.25;

pub fn compute_ber(tx: &BitMessage, rx: &BitMessage) -> Result<f64> {
    if tx.is_empty() {
        return Err(Error::EmptyMessage);
    }
    let compared = tx.len().min(rx.len());
    let wrong = tx.bits()[..compared].iter().zip(&rx.bits()[..compared]).filter(|(a, b)| a != b).count();
    let missing = tx.len() - compared;
    Ok((wrong + missing) as f64 / tx.len() as f64)
}

pub fn compute_ter(tx: &BitMessage, outcome: &DecodeOutcome) -> Result<f64> {
    match outcome.bits() {
        Some(rx) => compute_ber(tx, rx),
        None if tx.is_empty() => Err(Error::EmptyMessage),
        None => Ok(1.0),
    }
}

/// Fraction of TER values above zero.
pub fn compute_per(ters: &[f64]) -> Result<f64> {
    if ters.is_empty() {
        return Err(Error::InvalidParameter("PER of an empty record set".into()));
    }
    Ok(ters.iter().filter(|&&t| t > 0.0).count() as f64 / ters.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub scheme: SchemeId,
    /// Channel config id or dataset condition label.
    pub condition: String,
    pub trial: usize,
    pub seed: u64,
    pub tx_bits: BitMessage,
    pub outcome: DecodeOutcome,
    /// Defined only for decoded outcomes.
    pub ber: Option<f64>,
    pub ter: f64,
}

impl TrialRecord {
    pub fn new(
        scheme: SchemeId,
        condition: String,
        trial: usize,
        seed: u64,
        tx_bits: BitMessage,
        outcome: DecodeOutcome,
    ) -> Result<Self> {
        let ter = compute_ter(&tx_bits, &outcome)?;
        let ber = outcome.bits().map(|_| ter);
        Ok(Self { scheme, condition, trial, seed, tx_bits, outcome, ber, ter })
    }

    pub fn n_bits(&self) -> usize {
        self.tx_bits.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation over `√n`; 0 for a single value.
    pub stderr: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

/// Quantile by linear interpolation between order statistics: position
/// `h = (n - 1) q` in the sorted values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("cannot summarize an empty group".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        libm::sqrt(var) / libm::sqrt(n as f64)
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(SummaryStats {
        count: n,
        mean,
        stderr,
        median: quantile(&sorted, 0.5),
        p25: quantile(&sorted, 0.25),
        p75: quantile(&sorted, 0.75),
    })
}

/// Groups `(key, value)` pairs and summarizes each group, ordered by key.
pub fn summarize_by<K: Ord>(items: impl IntoIterator<Item = (K, f64)>) -> BTreeMap<K, SummaryStats> {
    let mut groups: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for (k, v) in items {
        groups.entry(k).or_default().push(v);
    }
    groups.into_iter().map(|(k, v)| (k, summarize(&v).expect("groups are nonempty"))).collect()
}

/// TER statistics per (scheme, condition).
pub fn summarize_records(records: &[TrialRecord]) -> BTreeMap<(SchemeId, String), SummaryStats> {
    summarize_by(records.iter().map(|r| ((r.scheme, r.condition.clone()), r.ter)))
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// One transmission: random payload, encode, normalize to −3 dBFS, pad with
/// silence, pass through the channel and decode.
pub fn run_trial(
    modem: &dyn Modem,
    channel: &ChannelConfig,
    payload_bits: usize,
    master_seed: u64,
    index: usize,
) -> Result<TrialRecord> {
    let seed = derive_seed(master_seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tx = BitMessage::random(&mut rng, modem.padded_payload_bits(payload_bits));
    let audio = normalize_peak(&modem.encode(&tx)?, DEFAULT_PEAK_DBFS)?;
    let pad = libm::round(TRIAL_PADDING_S * audio.sample_rate_hz as f64) as usize;
    let padded = audio.padded(pad, pad);
    let trial_channel = ChannelConfig { seed: splitmix64(channel.seed ^ seed), ..channel.clone() };
    let received = apply_channel(&padded, &trial_channel);
    let outcome = modem.decode(&received, tx.len());
    TrialRecord::new(modem.id(), channel.id.clone(), index, seed, tx, outcome)
}

/// Sequential trials in index order.
pub fn run_trials(
    scheme: SchemeId,
    channel: &ChannelConfig,
    n: usize,
    payload_bits: usize,
    master_seed: u64,
) -> Result<Vec<TrialRecord>> {
    if n == 0 {
        return Err(Error::InvalidParameter("trial count must be at least 1".into()));
    }
    let modem = scheme.modem();
    (0..n).map(|i| run_trial(modem.as_ref(), channel, payload_bits, master_seed, i)).collect()
}
