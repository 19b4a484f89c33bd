//! Bits, audio buffers and receiver outcomes shared by every scheme.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Default peak level applied to every transmission before playback.
pub const DEFAULT_PEAK_DBFS: f64 = -3.0;

/// An ordered sequence of payload bits.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitMessage {
    bits: Vec<bool>,
}

impl BitMessage {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: alloc::vec![false; len] }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        Self { bits: (0..len).map(|_| rng.random::<bool>()).collect() }
    }

    /// Reproducible random payload drawn from a ChaCha8 stream seeded with `seed`.
    pub fn from_seed(seed: u64, len: usize) -> Self {
        Self::random(&mut ChaCha8Rng::seed_from_u64(seed), len)
    }

    /// Unpacks `bit_count` bits from `bytes`, most significant bit first.
    pub fn from_bytes_msb(bytes: &[u8], bit_count: usize) -> Result<Self> {
        if bit_count > bytes.len() * 8 {
            return Err(Error::InvalidParameter(alloc::format!(
                "{bit_count} bits requested from {} bytes",
                bytes.len()
            )));
        }
        let bits = (0..bit_count).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect();
        Ok(Self { bits })
    }

    /// Packs the bits most significant bit first, zero-filling the last byte.
    pub fn to_bytes_msb(&self) -> Vec<u8> {
        let mut out = alloc::vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    /// Copy extended with zeros to `len` bits (or truncated to it).
    pub fn padded_to(&self, len: usize) -> Self {
        let mut bits = self.bits.clone();
        bits.resize(len, false);
        Self { bits }
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self { bits: self.bits[..len.min(self.bits.len())].to_vec() }
    }
}

impl fmt::Debug for BitMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMessage({} bits: ", self.bits.len())?;
        for &b in self.bits.iter().take(64) {
            f.write_str(if b { "1" } else { "0" })?;
        }
        if self.bits.len() > 64 {
            f.write_str("…")?;
        }
        f.write_str(")")
    }
}

impl From<Vec<bool>> for BitMessage {
    fn from(bits: Vec<bool>) -> Self {
        Self::new(bits)
    }
}

/// Mono audio with real amplitudes (nominally within [-1, 1]).
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        Self { samples, sample_rate_hz }
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self { samples: alloc::vec![0.0; len], sample_rate_hz }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, &s| f64::max(m, libm::fabs(s)))
    }

    /// Mean power (mean of squared samples).
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    pub fn rms(&self) -> f64 {
        libm::sqrt(self.power())
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Surrounds the signal with `lead` and `tail` zero samples.
    pub fn padded(&self, lead: usize, tail: usize) -> Self {
        let mut samples = Vec::with_capacity(lead + self.samples.len() + tail);
        samples.resize(lead, 0.0);
        samples.extend_from_slice(&self.samples);
        samples.resize(lead + self.samples.len() + tail, 0.0);
        Self { samples, sample_rate_hz: self.sample_rate_hz }
    }

    pub fn in_range(&self) -> bool {
        self.samples.iter().all(|s| (-1.0..=1.0).contains(s))
    }

    pub fn expect_rate(&self, rate: u32) -> Result<()> {
        if self.sample_rate_hz == rate {
            Ok(())
        } else {
            Err(Error::RateMismatch { expected: rate, actual: self.sample_rate_hz })
        }
    }
}

pub fn mean_power(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64
}

pub fn db_to_amplitude(db: f64) -> f64 {
    libm::pow(10.0, db / 20.0)
}

pub fn amplitude_to_db(amplitude: f64) -> f64 {
    20.0 * libm::log10(amplitude)
}

pub fn power_to_db(power: f64) -> f64 {
    10.0 * libm::log10(power)
}

/// Scales the whole signal so its largest absolute sample sits at `target_dbfs`.
pub fn normalize_peak(signal: &AudioSignal, target_dbfs: f64) -> Result<AudioSignal> {
    let peak = signal.peak();
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::SilentSignal);
    }
    let target = db_to_amplitude(target_dbfs);
    let mut out = signal.scaled(target / peak);
    // Keep the peak sample exactly on target despite the division rounding.
    for s in out.samples.iter_mut() {
        if *s > target {
            *s = target;
        } else if *s < -target {
            *s = -target;
        }
    }
    Ok(out)
}

/// Category of a receiver outcome, as exported to CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutcomeKind {
    Decoded,
    SyncFailure,
    FrameFailure,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Decoded => "decoded",
            OutcomeKind::SyncFailure => "sync_failure",
            OutcomeKind::FrameFailure => "frame_failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "decoded" => Some(OutcomeKind::Decoded),
            "sync_failure" => Some(OutcomeKind::SyncFailure),
            "frame_failure" => Some(OutcomeKind::FrameFailure),
            _ => None,
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a receiver returns for one recording.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodeOutcome {
    Decoded(BitMessage),
    SyncFailure(String),
    FrameFailure(String),
}

impl DecodeOutcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            DecodeOutcome::Decoded(_) => OutcomeKind::Decoded,
            DecodeOutcome::SyncFailure(_) => OutcomeKind::SyncFailure,
            DecodeOutcome::FrameFailure(_) => OutcomeKind::FrameFailure,
        }
    }

    pub fn bits(&self) -> Option<&BitMessage> {
        match self {
            DecodeOutcome::Decoded(bits) => Some(bits),
            _ => None,
        }
    }

    pub fn is_failure(&self) -> bool {
        !matches!(self, DecodeOutcome::Decoded(_))
    }

    pub fn diagnostics(&self) -> Option<&str> {
        match self {
            DecodeOutcome::Decoded(_) => None,
            DecodeOutcome::SyncFailure(d) | DecodeOutcome::FrameFailure(d) => Some(d),
        }
    }

    /// Wraps decoded bits, mapping an empty result to a frame failure.
    pub(crate) fn from_bits(bits: BitMessage) -> Self {
        if bits.is_empty() {
            DecodeOutcome::FrameFailure("decoder produced no bits".into())
        } else {
            DecodeOutcome::Decoded(bits)
        }
    }
}

impl From<Error> for DecodeOutcome {
    fn from(err: Error) -> Self {
        match err {
            Error::SyncNotFound(detail) => DecodeOutcome::SyncFailure(detail),
            other => DecodeOutcome::FrameFailure(alloc::format!("{other}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn normalize_to_minus_three_dbfs() {
        let s = AudioSignal::new(vec![0.0, 0.1, -0.05, 0.02], 48_000);
        let n = normalize_peak(&s, -3.0).unwrap();
        // 10^(-3/20), computed independently.
        assert!((n.peak() - 0.707_945_784_384_137_9).abs() < 1e-6);
        assert!((n.samples[2] / n.samples[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent() {
        let s = AudioSignal::new(vec![0.3, -0.1, 0.2], 48_000);
        let once = normalize_peak(&s, -3.0).unwrap();
        let twice = normalize_peak(&once, -3.0).unwrap();
        for (a, b) in once.samples.iter().zip(&twice.samples) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn normalize_rejects_silence() {
        let s = AudioSignal::silence(10, 48_000);
        assert_eq!(normalize_peak(&s, -3.0), Err(Error::SilentSignal));
    }

    #[test]
    fn bytes_round_trip_msb_first() {
        let m = BitMessage::from_bytes_msb(&[0b1010_0000, 0xff], 11).unwrap();
        assert_eq!(m.len(), 11);
        assert_eq!(&m.bits()[..4], &[true, false, true, false]);
        assert_eq!(m.to_bytes_msb(), vec![0b1010_0000, 0b1110_0000]);
    }

    #[test]
    fn failure_outcomes_carry_no_bits() {
        let o = DecodeOutcome::SyncFailure("x".into());
        assert!(o.bits().is_none());
        assert!(o.is_failure());
        assert_eq!(DecodeOutcome::from_bits(BitMessage::default()).kind(), OutcomeKind::FrameFailure);
    }

    proptest! {
        #[test]
        fn normalize_commutes_with_positive_scaling(
            xs in proptest::collection::vec(-1.0f64..1.0, 1..200),
            gain in 0.01f64..50.0,
        ) {
            prop_assume!(xs.iter().any(|x| x.abs() > 1e-6));
            let s = AudioSignal::new(xs, 48_000);
            let a = normalize_peak(&s, -3.0).unwrap();
            let b = normalize_peak(&s.scaled(gain), -3.0).unwrap();
            for (x, y) in a.samples.iter().zip(&b.samples) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
