//! Calibrated 8-FSK in 9–17 kHz with BCH(255,131) coding.
//!
//! Each coded block is sent as
//!
//! ```text
//! | preamble: 5 symbol periods, all 8 tones | 85 data symbols x 2 ms, 3 bits each |
//! ```
//!
//! The preamble serves both for synchronization and as the calibration
//! reference: its per-tone correlation magnitudes are the baselines, and each
//! tone's score during demodulation is multiplied by
//! `max(baseline) / baseline_m` before taking the argmax.

pub mod bch;
pub mod fec;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{self, Correlator};
use crate::resample::resample;
use crate::scheme::{Modem, SchemeId};
use crate::{AudioSignal, BitMessage, DecodeOutcome, Error, Result};

pub use bch::BchCode;
pub use fec::FecCodec;

#[derive(Debug, Clone, PartialEq)]
pub struct PriWhisperParams {
    pub tone_count: usize,
    pub base_hz: f64,
    pub spacing_hz: f64,
    pub symbol_s: f64,
    pub sample_rate_hz: u32,
    /// Symbol periods occupied by each block's preamble.
    pub sync_symbols: usize,
    /// BCH designed error-correction capability; 18 gives BCH(255,131).
    pub bch_t: usize,
    pub interleaver_seed: u64,
    /// Normalized correlation with the preamble required to accept a sync peak.
    pub sync_min_correlation: f64,
    /// Search radius around each block's predicted preamble position.
    pub block_search: usize,
}

impl Default for PriWhisperParams {
    fn default() -> Self {
        Self {
            tone_count: 8,
            base_hz: 9_000.0,
            spacing_hz: 1_000.0,
            symbol_s: 0.002,
            sample_rate_hz: 48_000,
            sync_symbols: 5,
            bch_t: 18,
            interleaver_seed: 1729,
            sync_min_correlation: 0.3,
            block_search: 48,
        }
    }
}

impl PriWhisperParams {
    pub fn tone_hz(&self, m: usize) -> f64 {
        self.base_hz + m as f64 * self.spacing_hz
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.tone_count.trailing_zeros() as usize
    }

    pub fn symbol_len(&self) -> usize {
        libm::round(self.symbol_s * self.sample_rate_hz as f64) as usize
    }

    pub fn preamble_len(&self) -> usize {
        self.sync_symbols * self.symbol_len()
    }

    pub fn raw_symbol_rate(&self) -> f64 {
        1.0 / self.symbol_s
    }
}

/// Per-tone baselines measured on a preamble and the derived multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub baseline: Vec<f64>,
    pub factor: Vec<f64>,
}

impl CalibrationTable {
    /// All factors 1: no correction.
    pub fn flat(tones: usize) -> Self {
        Self { baseline: vec![1.0; tones], factor: vec![1.0; tones] }
    }

    pub fn from_baseline(baseline: Vec<f64>) -> Result<Self> {
        if let Some(tone) = baseline.iter().position(|&b| !(b > 0.0)) {
            return Err(Error::DegenerateCalibration { tone });
        }
        let max = baseline.iter().copied().fold(0.0, f64::max);
        let factor = baseline.iter().map(|b| max / b).collect();
        Ok(Self { baseline, factor })
    }
}

#[derive(Debug, Clone)]
pub struct PriWhisperModem {
    params: PriWhisperParams,
    fec: FecCodec,
    /// One period of each data tone.
    symbols: Vec<Vec<f64>>,
    /// Demodulation references `e^{iω_m j}` over one symbol.
    references: Vec<Vec<Complex64>>,
    preamble: Vec<f64>,
    /// Analytic version of the preamble, used for envelope correlation.
    preamble_analytic: Vec<Complex64>,
}

impl Default for PriWhisperModem {
    fn default() -> Self {
        Self::new(PriWhisperParams::default()).expect("default parameters are valid")
    }
}

impl PriWhisperModem {
    pub fn new(params: PriWhisperParams) -> Result<Self> {
        if !params.tone_count.is_power_of_two() || params.tone_count < 2 {
            return Err(Error::InvalidParameter("tone count must be a power of two".into()));
        }
        let code = BchCode::new(params.bch_t);
        if code.n() % params.bits_per_symbol() != 0 {
            return Err(Error::InvalidParameter("codeword length must be a whole number of symbols".into()));
        }
        let fec = FecCodec::new(code, params.interleaver_seed);
        let (rate, len, m) = (params.sample_rate_hz, params.symbol_len(), params.tone_count);
        let references: Vec<Vec<Complex64>> =
            (0..m).map(|i| dsp::complex_tone(params.tone_hz(i), rate, len, 0.0)).collect();
        let symbols = references.iter().map(|r| r.iter().map(|c| c.re).collect()).collect();

        // Schroeder phases keep the crest factor of the tone sum low.
        let mut analytic = vec![Complex64::new(0.0, 0.0); params.preamble_len()];
        for i in 0..m {
            let phase = -PI * (i * i.saturating_sub(1)) as f64 / m as f64;
            for (a, t) in analytic.iter_mut().zip(dsp::complex_tone(params.tone_hz(i), rate, params.preamble_len(), phase)) {
                *a += t;
            }
        }
        let peak = analytic.iter().fold(0.0, |p, c| f64::max(p, libm::fabs(c.re)));
        for a in analytic.iter_mut() {
            *a /= peak;
        }
        let preamble = analytic.iter().map(|c| c.re).collect();
        Ok(Self { params, fec, symbols, references, preamble, preamble_analytic: analytic })
    }

    pub fn params(&self) -> &PriWhisperParams {
        &self.params
    }

    pub fn fec(&self) -> &FecCodec {
        &self.fec
    }

    pub fn preamble(&self) -> &[f64] {
        &self.preamble
    }

    pub fn data_symbols_per_block(&self) -> usize {
        self.fec.code().n() / self.params.bits_per_symbol()
    }

    pub fn block_len(&self) -> usize {
        self.params.preamble_len() + self.data_symbols_per_block() * self.params.symbol_len()
    }

    pub fn block_duration_s(&self) -> f64 {
        self.block_len() as f64 / self.params.sample_rate_hz as f64
    }

    /// Information bits per second of data symbols only.
    pub fn gross_rate_bps(&self) -> f64 {
        self.fec.code().k() as f64 / (self.data_symbols_per_block() as f64 * self.params.symbol_s)
    }

    /// Information bits per second including the preamble.
    pub fn net_rate_bps(&self) -> f64 {
        self.fec.code().k() as f64 / self.block_duration_s()
    }

    pub fn fec_encode(&self, payload: &BitMessage) -> Result<Vec<bool>> {
        self.fec.encode(payload)
    }

    pub fn fec_decode(&self, coded: &[bool], payload_bits: usize) -> Result<BitMessage> {
        self.fec.decode(coded, payload_bits)
    }

    pub fn encode(&self, msg: &BitMessage) -> Result<AudioSignal> {
        let coded = self.fec_encode(msg)?;
        let bps = self.params.bits_per_symbol();
        let n = self.fec.code().n();
        let mut samples = Vec::with_capacity(coded.len() / n * self.block_len());
        for block in coded.chunks(n) {
            samples.extend_from_slice(&self.preamble);
            for group in block.chunks(bps) {
                let tone = group.iter().fold(0usize, |v, &b| (v << 1) | b as usize);
                samples.extend_from_slice(&self.symbols[tone]);
            }
        }
        Ok(AudioSignal::new(samples, self.params.sample_rate_hz))
    }

    fn preamble_envelope(&self, signal: &AudioSignal) -> Vec<f64> {
        Correlator::new(&signal.samples).correlate_magnitude(&self.preamble_analytic)
    }

    /// Correlation at `offset` divided by the norms of the window and the
    /// template: 1 for a perfect preamble, at most `1/√M` for any data symbols.
    fn normalized_correlation(&self, samples: &[f64], envelope: &[f64], offset: usize) -> f64 {
        let window = &samples[offset..offset + self.params.preamble_len()];
        let energy: f64 = window.iter().map(|v| v * v).sum();
        let template: f64 = self.preamble_analytic.iter().map(|c| c.norm_sqr()).sum();
        if energy == 0.0 {
            0.0
        } else {
            envelope[offset] / libm::sqrt(energy * template)
        }
    }

    /// Start of the first preamble.
    pub fn sync(&self, signal: &AudioSignal) -> Result<usize> {
        signal.expect_rate(self.params.sample_rate_hz)?;
        let envelope = self.preamble_envelope(signal);
        self.first_preamble(&signal.samples, &envelope)
    }

    fn first_preamble(&self, samples: &[f64], envelope: &[f64]) -> Result<usize> {
        if envelope.is_empty() {
            return Err(Error::SyncNotFound("recording shorter than the preamble".into()));
        }
        let peak = envelope.iter().copied().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(Error::SyncNotFound("silent recording".into()));
        }
        // Every block repeats the preamble; take the first strong one.
        let first = envelope.iter().position(|&v| v >= 0.6 * peak).expect("peak exists");
        let end = (first + self.params.preamble_len()).min(envelope.len());
        let offset = first + dsp::argmax(&envelope[first..end]).expect("nonempty");
        let rho = self.normalized_correlation(samples, envelope, offset);
        if rho < self.params.sync_min_correlation {
            return Err(Error::SyncNotFound(format!(
                "preamble correlation {rho:.2} is below {:.2}",
                self.params.sync_min_correlation
            )));
        }
        Ok(offset)
    }

    fn tone_magnitudes(&self, segment: &[f64]) -> Vec<f64> {
        let len = self.params.symbol_len();
        self.references
            .iter()
            .map(|r| {
                segment.chunks(len).fold(Complex64::new(0.0, 0.0), |acc, c| acc + dsp::dot_conj(c, r)).norm()
            })
            .collect()
    }

    /// Baselines from the preamble starting at `offset`.
    pub fn calibrate(&self, signal: &AudioSignal, offset: usize) -> Result<CalibrationTable> {
        let len = self.params.preamble_len();
        let segment = signal
            .samples
            .get(offset..offset + len)
            .ok_or(Error::SignalTooShort { needed: offset + len, actual: signal.len() })?;
        CalibrationTable::from_baseline(self.tone_magnitudes(segment))
    }

    /// `argmax_m factor_m · |Σ r[j] e^{-iω_m j}|` over one symbol.
    pub fn demod_symbol(&self, segment: &[f64], calib: &CalibrationTable) -> usize {
        let scores: Vec<f64> = self
            .references
            .iter()
            .zip(&calib.factor)
            .map(|(r, f)| f * dsp::dot_conj(segment, r).norm())
            .collect();
        dsp::argmax(&scores).unwrap_or(0)
    }

    pub fn decode(&self, signal: &AudioSignal, expected_bits: usize) -> DecodeOutcome {
        if expected_bits == 0 {
            return DecodeOutcome::FrameFailure("expected bit count must be positive".into());
        }
        let p = &self.params;
        let resampled;
        let signal = if signal.sample_rate_hz != p.sample_rate_hz {
            match resample(signal, p.sample_rate_hz) {
                Ok(s) => {
                    resampled = s;
                    &resampled
                }
                Err(e) => return e.into(),
            }
        } else {
            signal
        };
        let envelope = self.preamble_envelope(signal);
        let start = match self.first_preamble(&signal.samples, &envelope) {
            Ok(s) => s,
            Err(e) => return e.into(),
        };

        let blocks = self.fec.blocks_for(expected_bits);
        let (block_len, sym_len, bps) = (self.block_len(), p.symbol_len(), p.bits_per_symbol());
        if start + blocks * block_len > signal.len() {
            return DecodeOutcome::FrameFailure(format!(
                "recording ends before block {} of {blocks}",
                (signal.len() - start) / block_len
            ));
        }
        let mut coded = Vec::with_capacity(blocks * self.fec.code().n());
        for b in 0..blocks {
            let predicted = start + b * block_len;
            let block_start = if b == 0 {
                predicted
            } else {
                let lo = predicted.saturating_sub(p.block_search);
                let hi = (predicted + p.block_search + 1).min(envelope.len());
                lo + dsp::argmax(&envelope[lo..hi]).unwrap_or(predicted - lo)
            };
            if block_start + block_len > signal.len() {
                return DecodeOutcome::FrameFailure(format!("recording ends inside block {b}"));
            }
            let calib = match self.calibrate(signal, block_start) {
                Ok(c) => c,
                Err(e) => return DecodeOutcome::FrameFailure(format!("block {b}: {e}")),
            };
            let data = block_start + p.preamble_len();
            for s in 0..self.data_symbols_per_block() {
                let at = data + s * sym_len;
                let tone = self.demod_symbol(&signal.samples[at..at + sym_len], &calib);
                coded.extend((0..bps).rev().map(|i| (tone >> i) & 1 == 1));
            }
        }
        match self.fec_decode(&coded, expected_bits) {
            Ok(bits) => DecodeOutcome::from_bits(bits),
            Err(e) => e.into(),
        }
    }
}

impl Modem for PriWhisperModem {
    fn id(&self) -> SchemeId {
        SchemeId::PriWhisper
    }

    fn sample_rate_hz(&self) -> u32 {
        self.params.sample_rate_hz
    }

    fn padded_payload_bits(&self, requested: usize) -> usize {
        self.fec.padded_payload_bits(requested.max(1))
    }

    fn encode(&self, msg: &BitMessage) -> Result<AudioSignal> {
        PriWhisperModem::encode(self, msg)
    }

    fn decode(&self, signal: &AudioSignal, expected_bits: usize) -> DecodeOutcome {
        PriWhisperModem::decode(self, signal, expected_bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::OutcomeKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn random_msg(seed: u64, len: usize) -> BitMessage {
        BitMessage::random(&mut ChaCha8Rng::seed_from_u64(seed), len)
    }

    fn tone(freq: f64, len: usize, amp: f64) -> Vec<f64> {
        (0..len).map(|j| amp * libm::cos(2.0 * PI * freq * j as f64 / 48_000.0)).collect()
    }

    /// Scales each data tone and each preamble component by `gains[m]`.
    fn per_tone_gain_modem(gains: &[f64]) -> (PriWhisperModem, PriWhisperModem) {
        let reference = PriWhisperModem::default();
        let mut shaped = reference.clone();
        let p = reference.params().clone();
        for (m, g) in gains.iter().enumerate() {
            for v in shaped.symbols[m].iter_mut() {
                *v *= g;
            }
        }
        let peak = reference.preamble_analytic.iter().fold(0.0, |a, c| f64::max(a, libm::fabs(c.re)));
        shaped.preamble = (0..p.preamble_len())
            .map(|j| {
                (0..p.tone_count)
                    .map(|m| {
                        let phase = -PI * (m * m.saturating_sub(1)) as f64 / p.tone_count as f64;
                        gains[m] * libm::cos(2.0 * PI * p.tone_hz(m) * j as f64 / 48_000.0 + phase)
                    })
                    .sum::<f64>()
                    / peak
            })
            .collect();
        (reference, shaped)
    }

    #[test]
    fn rate_arithmetic() {
        let m = PriWhisperModem::default();
        let p = m.params();
        assert_eq!(p.symbol_len(), 96);
        assert_eq!(p.preamble_len(), 480);
        assert_eq!(p.raw_symbol_rate() * p.bits_per_symbol() as f64, 1500.0);
        assert_eq!(m.data_symbols_per_block(), 85);
        assert_eq!(m.block_len(), 8640);
        assert!((m.gross_rate_bps() / 771.0 - 1.0).abs() < 0.001);
        assert!((m.net_rate_bps() / 729.0 - 1.0).abs() < 0.002);
        for i in 0..8 {
            let f = p.tone_hz(i);
            assert!((9_000.0..=17_000.0).contains(&f));
        }
    }

    #[test]
    fn encoded_durations() {
        let m = PriWhisperModem::default();
        let one = m.encode(&random_msg(1, 115)).unwrap();
        assert_eq!(one.len(), 8640);
        assert!((one.duration_s() - 0.180).abs() < 1.0 / 48_000.0);
        let near = m.encode(&random_msg(2, 4096)).unwrap();
        assert_eq!(near.len(), 32 * 8640);
        assert!((near.duration_s() - 5.76).abs() < 1e-9);
        assert!(near.peak() <= 1.0 + 1e-12);
    }

    #[test]
    fn preamble_has_eight_equal_peaks() {
        let m = PriWhisperModem::default();
        let mags = m.tone_magnitudes(m.preamble());
        let max = mags.iter().copied().fold(0.0, f64::max);
        for v in &mags {
            assert!((20.0 * libm::log10(v / max)).abs() < 0.5);
        }
        assert!((m.preamble().iter().fold(0.0, |a: f64, v| a.max(v.abs())) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tones_are_orthogonal() {
        let m = PriWhisperModem::default();
        for a in 0..8 {
            let same = dsp::dot_conj(&m.symbols[a], &m.references[a]).norm();
            for b in (0..8).filter(|&b| b != a) {
                let cross = dsp::dot_conj(&m.symbols[a], &m.references[b]).norm();
                assert!(cross <= 0.01 * same, "{a} vs {b}: {cross}");
            }
        }
    }

    #[test]
    fn sync_after_one_second() {
        let m = PriWhisperModem::default();
        let s = m.encode(&random_msg(3, 115)).unwrap().padded(48_000, 4_800);
        assert_eq!(m.sync(&s).unwrap(), 48_000);
        let multi = m.encode(&random_msg(4, 600)).unwrap().padded(1_234, 100);
        assert_eq!(m.sync(&multi).unwrap(), 1_234);
    }

    #[test]
    fn noise_does_not_sync() {
        let m = PriWhisperModem::default();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = Normal::new(0.0, 0.3).unwrap();
            let s = AudioSignal::new((0..96_000).map(|_| n.sample(&mut rng)).collect(), 48_000);
            assert!(matches!(m.sync(&s), Err(Error::SyncNotFound(_))), "seed {seed}");
        }
        assert!(matches!(m.sync(&AudioSignal::silence(9_000, 48_000)), Err(Error::SyncNotFound(_))));
    }

    #[test]
    fn identity_calibration_is_flat() {
        let m = PriWhisperModem::default();
        let s = m.encode(&random_msg(5, 115)).unwrap();
        let cal = m.calibrate(&s, 0).unwrap();
        for f in &cal.factor {
            assert!((f - 1.0).abs() < 1e-3, "{f}");
        }
    }

    #[test]
    fn attenuated_tone_gets_compensating_factor() {
        let mut gains = [1.0; 8];
        gains[3] = crate::audio::db_to_amplitude(-6.0);
        let (_, shaped) = per_tone_gain_modem(&gains);
        let s = shaped.encode(&random_msg(6, 115)).unwrap();
        let cal = shaped.calibrate(&s, 0).unwrap();
        let oracle = 1.0 / gains[3];
        assert!((cal.factor[3] / oracle - 1.0).abs() < 0.05, "{}", cal.factor[3]);
        assert!(cal.factor.iter().all(|&f| f >= 1.0));
        assert!(cal.factor.iter().any(|&f| f == 1.0));
    }

    #[test]
    fn zero_preamble_is_degenerate() {
        let m = PriWhisperModem::default();
        let s = AudioSignal::silence(1_000, 48_000);
        assert_eq!(m.calibrate(&s, 0), Err(Error::DegenerateCalibration { tone: 0 }));
    }

    #[test]
    fn demod_pure_tone() {
        let m = PriWhisperModem::default();
        let flat = CalibrationTable::flat(8);
        assert_eq!(m.demod_symbol(&tone(12_000.0, 96, 1.0), &flat), 3);
    }

    #[test]
    fn demod_is_invariant_to_per_tone_gains() {
        // Tone 3 is 10 dB down and a neighbour carries leakage; calibration from
        // the same gains must still pick tone 3.
        let mut gains = [1.0; 8];
        gains[3] = crate::audio::db_to_amplitude(-10.0);
        let (_, shaped) = per_tone_gain_modem(&gains);
        let cal = shaped.calibrate(&AudioSignal::new(shaped.preamble.clone(), 48_000), 0).unwrap();
        let mut seg = tone(12_000.0, 96, gains[3]);
        for (s, v) in seg.iter_mut().zip(tone(13_000.0, 96, 0.2 * gains[3])) {
            *s += v;
        }
        assert_eq!(shaped.demod_symbol(&seg, &cal), 3);
        for sweep in [0.05, 0.3, 1.0, 3.0, 20.0] {
            let mut g = [1.0; 8];
            g[3] = sweep;
            let (_, m) = per_tone_gain_modem(&g);
            let cal = m.calibrate(&AudioSignal::new(m.preamble.clone(), 48_000), 0).unwrap();
            assert_eq!(m.demod_symbol(&tone(12_000.0, 96, sweep), &cal), 3, "gain {sweep}");
        }
    }

    #[test]
    fn demod_under_awgn() {
        let m = PriWhisperModem::default();
        let flat = CalibrationTable::flat(8);
        let clean = tone(12_000.0, 96, 1.0);
        let sigma = libm::sqrt(0.5 / 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = Normal::new(0.0, sigma).unwrap();
        let hits = (0..100)
            .filter(|_| {
                let seg: Vec<f64> = clean.iter().map(|v| v + n.sample(&mut rng)).collect();
                m.demod_symbol(&seg, &flat) == 3
            })
            .count();
        assert!(hits >= 99, "{hits}");
    }

    #[test]
    fn round_trips() {
        let m = PriWhisperModem::default();
        for seed in 0..100 {
            let msg = random_msg(100 + seed, 115);
            let s = m.encode(&msg).unwrap().padded(960, 960);
            assert_eq!(m.decode(&s, 115), DecodeOutcome::Decoded(msg), "seed {seed}");
        }
        let msg = random_msg(8, 1000);
        let s = m.encode(&msg).unwrap().padded(5_000, 5_000);
        assert_eq!(m.decode(&s, 1000), DecodeOutcome::Decoded(msg));
    }

    #[test]
    fn truncated_recording_is_frame_failure() {
        let m = PriWhisperModem::default();
        let s = m.encode(&random_msg(9, 400)).unwrap();
        let cut = AudioSignal::new(s.samples[..s.len() - 8640].to_vec(), 48_000);
        assert_eq!(m.decode(&cut, 400).kind(), OutcomeKind::FrameFailure);
    }

    #[test]
    fn decodes_44100_recording() {
        let m = PriWhisperModem::default();
        let msg = random_msg(10, 200);
        let s = m.encode(&msg).unwrap().padded(2_400, 2_400);
        let r = resample(&s, 44_100).unwrap();
        assert_eq!(m.decode(&r, 200), DecodeOutcome::Decoded(msg));
    }
}
