//! Chirp binary orthogonal keying.
//!
//! A frame is one long up-chirp preamble followed by sixteen data chirps.
//! A `1` bit is an up-chirp across the band, a `0` bit the matching
//! down-chirp. The receiver finds the preamble with a matched filter and
//! decides each bit by whichever template correlates more strongly.
//!
//! ```text
//! | preamble 100 ms | b0 62.5 ms | b1 | ... | b15 |   = 1.1 s per frame
//! ```

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{self, Correlator};
use crate::resample::resample;
use crate::scheme::{Modem, SchemeId};
use crate::{AudioSignal, BitMessage, DecodeOutcome, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeeParams {
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub preamble_s: f64,
    pub symbol_s: f64,
    pub bits_per_frame: usize,
    pub sample_rate_hz: u32,
    /// Required ratio of the preamble correlation peak to the median
    /// absolute correlation.
    pub sync_threshold: f64,
    /// Fraction of every chirp covered by raised-cosine edges.
    pub taper: f64,
}

impl Default for LeeParams {
    fn default() -> Self {
        Self {
            f_low_hz: 19_500.0,
            f_high_hz: 22_000.0,
            preamble_s: 0.100,
            symbol_s: 0.0625,
            bits_per_frame: 16,
            sample_rate_hz: 48_000,
            sync_threshold: 6.0,
            taper: 0.5,
        }
    }
}

impl LeeParams {
    pub fn preamble_len(&self) -> usize {
        libm::round(self.preamble_s * self.sample_rate_hz as f64) as usize
    }

    pub fn symbol_len(&self) -> usize {
        libm::round(self.symbol_s * self.sample_rate_hz as f64) as usize
    }

    pub fn frame_len(&self) -> usize {
        self.preamble_len() + self.bits_per_frame * self.symbol_len()
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.preamble_s + self.bits_per_frame as f64 * self.symbol_s
    }

    /// Payload bits per second including the preamble.
    pub fn net_rate_bps(&self) -> f64 {
        self.bits_per_frame as f64 / self.frame_duration_s()
    }

    /// Payload bits per second over the data chirps alone.
    pub fn gross_rate_bps(&self) -> f64 {
        1.0 / self.symbol_s
    }
}

/// Linear chirp from `f0` to `f1` with Tukey edges: `(real waveform, analytic reference)`.
pub fn chirp(f0: f64, f1: f64, len: usize, rate: u32, taper: f64) -> (Vec<f64>, Vec<Complex64>) {
    let dur = len as f64 / rate as f64;
    let sweep = (f1 - f0) / dur;
    let window = dsp::tukey(len, taper);
    window
        .iter()
        .enumerate()
        .map(|(j, &w)| {
            let t = j as f64 / rate as f64;
            let phase = 2.0 * PI * (f0 * t + 0.5 * sweep * t * t);
            let (s, c) = (libm::sin(phase), libm::cos(phase));
            (w * c, Complex64::new(w * c, w * s))
        })
        .unzip()
}

#[derive(Debug, Clone)]
pub struct LeeModem {
    params: LeeParams,
    preamble: Vec<f64>,
    preamble_ref: Vec<Complex64>,
    up: Vec<f64>,
    up_ref: Vec<Complex64>,
    down: Vec<f64>,
    down_ref: Vec<Complex64>,
}

impl Default for LeeModem {
    fn default() -> Self {
        Self::new(LeeParams::default())
    }
}

impl LeeModem {
    pub fn new(params: LeeParams) -> Self {
        let rate = params.sample_rate_hz;
        let (lo, hi) = (params.f_low_hz, params.f_high_hz);
        let (preamble, preamble_ref) = chirp(lo, hi, params.preamble_len(), rate, params.taper);
        let (up, up_ref) = chirp(lo, hi, params.symbol_len(), rate, params.taper);
        let (down, down_ref) = chirp(hi, lo, params.symbol_len(), rate, params.taper);
        Self { params, preamble, preamble_ref, up, up_ref, down, down_ref }
    }

    pub fn params(&self) -> &LeeParams {
        &self.params
    }

    pub fn up_chirp(&self) -> &[f64] {
        &self.up
    }

    pub fn down_chirp(&self) -> &[f64] {
        &self.down
    }

    pub fn frames_for(&self, bits: usize) -> usize {
        bits.div_ceil(self.params.bits_per_frame)
    }

    /// Zero-pads the final frame; the pad count is implied by the frame count.
    pub fn encode(&self, msg: &BitMessage) -> Result<AudioSignal> {
        if msg.is_empty() {
            return Err(Error::EmptyMessage);
        }
        let frames = self.frames_for(msg.len());
        let padded = msg.padded_to(frames * self.params.bits_per_frame);
        let mut samples = Vec::with_capacity(frames * self.params.frame_len());
        for frame in padded.bits().chunks(self.params.bits_per_frame) {
            samples.extend_from_slice(&self.preamble);
            for &bit in frame {
                samples.extend_from_slice(if bit { &self.up } else { &self.down });
            }
        }
        Ok(AudioSignal::new(samples, self.params.sample_rate_hz))
    }

    fn envelope(&self, signal: &AudioSignal) -> Result<Vec<f64>> {
        signal.expect_rate(self.params.sample_rate_hz)?;
        if signal.len() < self.preamble.len() {
            return Err(Error::SyncNotFound(format!(
                "recording shorter than the {} sample preamble",
                self.preamble.len()
            )));
        }
        Ok(Correlator::new(&signal.samples).correlate_magnitude(&self.preamble_ref))
    }

    /// Sample index where the first frame's preamble begins.
    pub fn sync(&self, signal: &AudioSignal) -> Result<usize> {
        let env = self.envelope(signal)?;
        self.first_preamble(&env)
    }

    fn first_preamble(&self, env: &[f64]) -> Result<usize> {
        let peak = env.iter().copied().fold(0.0, f64::max);
        let med = dsp::median(env);
        if peak <= 0.0 || peak < self.params.sync_threshold * med {
            return Err(Error::SyncNotFound(format!(
                "preamble peak is {:.2}x the median correlation, {:.1}x required",
                if med > 0.0 { peak / med } else { 0.0 },
                self.params.sync_threshold
            )));
        }
        // Frames repeat the preamble, so the strongest peak may belong to a later
        // frame: take the first crossing of half the maximum, then its local peak.
        let first = env.iter().position(|&v| v >= 0.5 * peak).unwrap_or(0);
        Ok(first + local_argmax(env, first, first + self.peak_radius()))
    }

    /// Roughly two envelope widths (1 / bandwidth) of the chirp matched filter.
    fn peak_radius(&self) -> usize {
        let width = self.params.sample_rate_hz as f64 / (self.params.f_high_hz - self.params.f_low_hz);
        libm::ceil(2.0 * width) as usize
    }

    /// One bit per data chirp starting at `start`.
    fn demodulate_frame(&self, samples: &[f64], start: usize) -> Option<Vec<bool>> {
        let sym = self.params.symbol_len();
        (0..self.params.bits_per_frame)
            .map(|k| {
                let seg = samples.get(start + k * sym..start + (k + 1) * sym)?;
                let up = dsp::dot_conj(seg, &self.up_ref).norm();
                let down = dsp::dot_conj(seg, &self.down_ref).norm();
                Some(up > down)
            })
            .collect()
    }

    pub fn decode(&self, signal: &AudioSignal, expected_bits: usize) -> DecodeOutcome {
        if expected_bits == 0 {
            return DecodeOutcome::FrameFailure("expected bit count must be positive".into());
        }
        let resampled;
        let signal = if signal.sample_rate_hz != self.params.sample_rate_hz {
            match resample(signal, self.params.sample_rate_hz) {
                Ok(s) => {
                    resampled = s;
                    &resampled
                }
                Err(e) => return e.into(),
            }
        } else {
            signal
        };
        let env = match self.envelope(signal) {
            Ok(env) => env,
            Err(e) => return e.into(),
        };
        let first = match self.first_preamble(&env) {
            Ok(p) => p,
            Err(e) => return e.into(),
        };

        let frame_len = self.params.frame_len();
        let refine = self.params.sample_rate_hz as usize / 500;
        let mut bits = Vec::with_capacity(expected_bits);
        for frame in 0..self.frames_for(expected_bits) {
            let nominal = first + frame * frame_len;
            if nominal >= env.len() {
                return DecodeOutcome::FrameFailure(format!("recording ends before frame {frame}"));
            }
            let start = if frame == 0 {
                nominal
            } else {
                let lo = nominal.saturating_sub(refine);
                lo + local_argmax(&env, lo, nominal + refine)
            };
            match self.demodulate_frame(&signal.samples, start + self.preamble.len()) {
                Some(frame_bits) => bits.extend(frame_bits),
                None => {
                    return DecodeOutcome::FrameFailure(format!("recording truncated inside frame {frame}"))
                }
            }
        }
        bits.truncate(expected_bits);
        DecodeOutcome::from_bits(BitMessage::new(bits))
    }
}

/// Offset (relative to `lo`) of the largest value in `env[lo..hi]`, clipped to the slice.
fn local_argmax(env: &[f64], lo: usize, hi: usize) -> usize {
    let hi = hi.min(env.len());
    if lo >= hi {
        return 0;
    }
    dsp::argmax(&env[lo..hi]).unwrap_or(0)
}

impl Modem for LeeModem {
    fn id(&self) -> SchemeId {
        SchemeId::Lee
    }

    fn sample_rate_hz(&self) -> u32 {
        self.params.sample_rate_hz
    }

    fn padded_payload_bits(&self, requested: usize) -> usize {
        self.frames_for(requested.max(1)) * self.params.bits_per_frame
    }

    fn encode(&self, msg: &BitMessage) -> Result<AudioSignal> {
        LeeModem::encode(self, msg)
    }

    fn decode(&self, signal: &AudioSignal, expected_bits: usize) -> DecodeOutcome {
        LeeModem::decode(self, signal, expected_bits)
    }
}
