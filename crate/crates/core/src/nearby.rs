//! Spread-spectrum MFSK in 18.5–20 kHz with token framing.
//!
//! Every symbol is one of sixteen tones (4 bits) multiplied by one period of
//! a band-limited spreading code. Symbols are grouped into tokens:
//!
//! ```text
//! | spacer | d0 | d1 | ... | d15 | parity |     parity = d0 ^ d1 ^ ... ^ d15
//! ```
//!
//! The receiver correlates every sample offset against the code on every
//! tone (the raw acquisition scores), normalizes those scores by the local
//! signal energy, and takes the earliest of the strongest peaks as the start
//! of the transmission.
//!
//! The spreading code starts from a 9-stage maximal-length sequence. Its
//! first `code_period` chips are band-limited by keeping only the lowest
//! `code_harmonics` Fourier harmonics of one period, which keeps the spread
//! signal inside the band. The same trigonometric interpolant gives the code
//! at the 12 kHz code rate and at the 48 kHz output rate, so the output-rate
//! table is the sinc interpolation of the code-rate sequence.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{self, Correlator};
use crate::resample::resample;
use crate::scheme::{Modem, SchemeId};
use crate::{AudioSignal, BitMessage, DecodeOutcome, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NearbyParams {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub tone_count: usize,
    pub tone_spacing_hz: f64,
    pub bits_per_symbol: usize,
    /// Code sample rate `F_b`.
    pub code_rate_hz: u32,
    /// Code samples per symbol `M_p`.
    pub code_period: usize,
    pub output_rate_hz: u32,
    /// Lag `d` between a raw score row and the start of its energy window.
    pub normalization_lag: usize,
    /// Noise-floor weight `η` of the noise-suppression filter.
    pub noise_floor_param: f64,
    pub data_symbols_per_token: usize,
    /// Tone reserved for the spacer symbol; lies between two data tones.
    pub spacer_hz: f64,
    /// Initial LFSR state of the spreading sequence.
    pub code_seed: u16,
    pub code_harmonics: usize,
    /// Tukey fraction applied to every symbol.
    pub symbol_taper: f64,
    /// Peaks must reach this multiple of the median normalized score.
    pub sync_peak_ratio: f64,
    /// Energy floor, as a fraction of the largest window energy.
    pub energy_floor: f64,
    /// Spectrum kept on either side of the band by the noise-suppression filter.
    pub guard_hz: f64,
}

impl Default for NearbyParams {
    fn default() -> Self {
        Self {
            band_low_hz: 18_500.0,
            band_high_hz: 20_000.0,
            tone_count: 16,
            tone_spacing_hz: 100.0,
            bits_per_symbol: 4,
            code_rate_hz: 12_000,
            code_period: 508,
            output_rate_hz: 48_000,
            normalization_lag: 215,
            noise_floor_param: 1.0,
            data_symbols_per_token: 16,
            spacer_hz: 19_250.0,
            code_seed: 197,
            code_harmonics: 8,
            symbol_taper: 0.5,
            sync_peak_ratio: 4.0,
            energy_floor: 0.05,
            guard_hz: 300.0,
        }
    }
}

impl NearbyParams {
    /// Output samples per code sample.
    pub fn upsampling(&self) -> usize {
        (self.output_rate_hz / self.code_rate_hz) as usize
    }

    pub fn symbol_len(&self) -> usize {
        self.code_period * self.upsampling()
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.code_period as f64 / self.code_rate_hz as f64
    }

    pub fn symbols_per_token(&self) -> usize {
        self.data_symbols_per_token + 2
    }

    pub fn bits_per_token(&self) -> usize {
        self.data_symbols_per_token * self.bits_per_symbol
    }

    pub fn gross_rate_bps(&self) -> f64 {
        self.bits_per_symbol as f64 / self.symbol_duration_s()
    }

    pub fn net_rate_bps(&self) -> f64 {
        self.gross_rate_bps() * self.data_symbols_per_token as f64 / self.symbols_per_token() as f64
    }

    pub fn tone_hz(&self, index: usize) -> f64 {
        self.band_low_hz + index as f64 * self.tone_spacing_hz
    }

    /// Index used for the spacer in symbol sequences.
    pub fn spacer_index(&self) -> usize {
        self.tone_count
    }

    fn validate(&self) -> Result<()> {
        if self.code_rate_hz == 0 || self.output_rate_hz % self.code_rate_hz != 0 {
            return Err(Error::InvalidParameter("output rate must be a multiple of the code rate".into()));
        }
        if self.tone_count != 1 << self.bits_per_symbol {
            return Err(Error::InvalidParameter("tone count must equal 2^bits_per_symbol".into()));
        }
        Ok(())
    }
}

/// Chips of the 9-stage maximal-length sequence (`a[n+9] = a[n+8] ^ a[n+4]`) as ±1.
pub fn mls_chips(seed: u16, len: usize) -> Vec<f64> {
    let mut state = seed & 0x1ff;
    if state == 0 {
        state = 1;
    }
    (0..len)
        .map(|_| {
            let out = (state >> 8) & 1;
            let feedback = out ^ ((state >> 4) & 1);
            state = ((state << 1) | feedback) & 0x1ff;
            if out == 1 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

/// Band-limited spreading code at the code rate and at the output rate.
#[derive(Debug, Clone)]
pub struct SpreadingCode {
    pub at_code_rate: Vec<f64>,
    pub at_output_rate: Vec<f64>,
}

impl SpreadingCode {
    pub fn new(params: &NearbyParams) -> Self {
        let chips = mls_chips(params.code_seed, params.code_period);
        let period = params.code_period as f64;
        let harmonics: Vec<Complex64> = (0..=params.code_harmonics)
            .map(|k| {
                chips.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, &c)| {
                    let a = -2.0 * PI * (k * j) as f64 / period;
                    acc + Complex64::new(libm::cos(a), libm::sin(a)) * c
                })
            })
            .collect();
        // Periodic (trigonometric) interpolation at phase position `x` in [0, 1).
        let eval = |x: f64| -> f64 {
            let mut v = harmonics[0].re;
            for (k, h) in harmonics.iter().enumerate().skip(1) {
                let a = 2.0 * PI * k as f64 * x;
                v += 2.0 * (h * Complex64::new(libm::cos(a), libm::sin(a))).re;
            }
            v / period
        };
        let at_code_rate: Vec<f64> = (0..params.code_period).map(|m| eval(m as f64 / period)).collect();
        let out_len = params.symbol_len();
        let at_output_rate: Vec<f64> = (0..out_len).map(|n| eval(n as f64 / out_len as f64)).collect();
        // Unit RMS at the output rate; the same factor keeps both tables consistent.
        let rms = libm::sqrt(crate::audio::mean_power(&at_output_rate));
        Self {
            at_code_rate: at_code_rate.iter().map(|v| v / rms).collect(),
            at_output_rate: at_output_rate.iter().map(|v| v / rms).collect(),
        }
    }

    /// The output-rate code repeated for `periods` consecutive symbols.
    pub fn tiled(&self, periods: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(periods * self.at_output_rate.len());
        for _ in 0..periods {
            out.extend_from_slice(&self.at_output_rate);
        }
        out
    }
}

/// Output-rate index of code sample `m` of symbol `k`: `(k·M_p + m) / F_b` seconds
/// converted to samples at the output rate.
pub fn interpolated_code_index(params: &NearbyParams, k: usize, m: usize) -> usize {
    (k * params.code_period + m) * params.output_rate_hz as usize / params.code_rate_hz as usize
}

/// Reads the interpolated code at the position of code sample `m` of symbol `k`.
pub fn interpolate_code(code: &[f64], k: usize, m: usize, params: &NearbyParams) -> Result<f64> {
    let index = interpolated_code_index(params, k, m);
    code.get(index).copied().ok_or(Error::CodeIndexOutOfRange { index, len: code.len() })
}

/// Row-major score matrix: one row per sample offset, one column per tone
/// (the sixteen data tones followed by the spacer).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Best tone score per row.
    pub fn row_max(&self) -> Vec<f64> {
        self.data.chunks_exact(self.cols).map(|r| r.iter().copied().fold(0.0, f64::max)).collect()
    }
}

/// Raw and normalized acquisition scores.
///
/// Normalized row `i` corresponds to raw row `i + d`; the first `d` raw rows
/// have no complete energy window and produce no normalized row.
#[derive(Debug, Clone)]
pub struct AcquisitionMatrix {
    pub raw: ScoreMatrix,
    pub normalized: Option<ScoreMatrix>,
    /// Running sum of squared samples (`len + 1` entries).
    cumulative_energy: Vec<f64>,
    template_energy: f64,
}

#[derive(Debug, Clone)]
pub struct NearbyModem {
    params: NearbyParams,
    code: SpreadingCode,
    /// Complex templates `w · c · e^{iωt}`, data tones then spacer.
    templates: Vec<Vec<Complex64>>,
    /// Scale putting the largest symbol sample at full scale.
    amplitude: f64,
}

impl Default for NearbyModem {
    fn default() -> Self {
        Self::new(NearbyParams::default()).expect("default parameters are valid")
    }
}

impl NearbyModem {
    pub fn new(params: NearbyParams) -> Result<Self> {
        params.validate()?;
        let code = SpreadingCode::new(&params);
        let window = dsp::tukey(params.symbol_len(), params.symbol_taper);
        let envelope: Vec<f64> = window.iter().zip(&code.at_output_rate).map(|(w, c)| w * c).collect();
        let freqs = (0..params.tone_count).map(|i| params.tone_hz(i)).chain([params.spacer_hz]);
        let templates = freqs
            .map(|f| {
                dsp::complex_tone(f, params.output_rate_hz, envelope.len(), 0.0)
                    .into_iter()
                    .zip(&envelope)
                    .map(|(t, e)| t * *e)
                    .collect()
            })
            .collect();
        let amplitude = 1.0 / envelope.iter().fold(0.0, |m, e| f64::max(m, libm::fabs(*e)));
        Ok(Self { params, code, templates, amplitude })
    }

    pub fn params(&self) -> &NearbyParams {
        &self.params
    }

    pub fn code(&self) -> &SpreadingCode {
        &self.code
    }

    pub fn tokens_for(&self, bits: usize) -> usize {
        bits.div_ceil(self.params.bits_per_token())
    }

    /// Symbol indices for `msg`: spacer, data, parity per token.
    pub fn token_symbols(&self, msg: &BitMessage) -> Result<Vec<usize>> {
        if msg.is_empty() {
            return Err(Error::EmptyMessage);
        }
        let p = &self.params;
        let tokens = self.tokens_for(msg.len());
        let padded = msg.padded_to(tokens * p.bits_per_token());
        let mut symbols = Vec::with_capacity(tokens * p.symbols_per_token());
        for token in padded.bits().chunks(p.bits_per_token()) {
            symbols.push(p.spacer_index());
            let mut parity = 0;
            for group in token.chunks(p.bits_per_symbol) {
                let value = group.iter().fold(0usize, |v, &b| (v << 1) | b as usize);
                parity ^= value;
                symbols.push(value);
            }
            symbols.push(parity);
        }
        Ok(symbols)
    }

    /// Synthesizes the waveform for a sequence of symbol indices.
    pub fn encode_symbols(&self, symbols: &[usize]) -> AudioSignal {
        let len = self.params.symbol_len();
        let mut samples = Vec::with_capacity(symbols.len() * len);
        for &s in symbols {
            samples.extend(self.templates[s].iter().map(|t| t.re * self.amplitude));
        }
        AudioSignal::new(samples, self.params.output_rate_hz)
    }

    pub fn encode(&self, msg: &BitMessage) -> Result<AudioSignal> {
        Ok(self.encode_symbols(&self.token_symbols(msg)?))
    }

    /// Correlation magnitude of the segment at every offset with one code period, per tone.
    pub fn raw_scores(&self, signal: &AudioSignal) -> Result<AcquisitionMatrix> {
        signal.expect_rate(self.params.output_rate_hz)?;
        let len = self.params.symbol_len();
        if signal.len() < len {
            return Err(Error::SignalTooShort { needed: len, actual: signal.len() });
        }
        // Last offset where a complete code period still fits.
        let rows = signal.len() - len + 1;
        let cols = self.templates.len();
        let correlator = Correlator::new(&signal.samples);
        let mut data = vec![0.0; rows * cols];
        for (c, t) in self.templates.iter().enumerate() {
            for (r, v) in correlator.correlate_magnitude(t).into_iter().enumerate() {
                data[r * cols + c] = v;
            }
        }
        let mut cumulative_energy = Vec::with_capacity(signal.len() + 1);
        cumulative_energy.push(0.0);
        let mut acc = 0.0;
        for s in &signal.samples {
            acc += s * s;
            cumulative_energy.push(acc);
        }
        let template_energy = self.templates[0].iter().map(|t| t.norm_sqr()).sum();
        Ok(AcquisitionMatrix {
            raw: ScoreMatrix { rows, cols, data },
            normalized: None,
            cumulative_energy,
            template_energy,
        })
    }

    /// Energy-normalized squared scores.
    ///
    /// For raw row `n ≥ d` the energy window spans samples `n - d .. n + L`
    /// (`L` = one symbol) and the score becomes
    /// `raw² / ((E + floor · E_max) · E_template)`, which lies in `[0, 1]`
    /// and does not change under uniform scaling of the recording. Rows with
    /// `n < d` would need samples before the recording and are dropped.
    pub fn normalize_scores(&self, acq: &mut AcquisitionMatrix) -> Result<()> {
        let d = self.params.normalization_lag;
        let raw = &acq.raw;
        if raw.rows <= d {
            return Err(Error::TooFewRows { rows: raw.rows, lag: d });
        }
        let len = self.params.symbol_len();
        let cum = &acq.cumulative_energy;
        let total = cum.len() - 1;
        let window_energy: Vec<f64> =
            (d..raw.rows).map(|n| cum[(n + len).min(total)] - cum[n - d]).collect();
        let e_max = window_energy.iter().copied().fold(0.0, f64::max);
        let rows = raw.rows - d;
        let mut data = vec![0.0; rows * raw.cols];
        if e_max > 0.0 {
            let floor = self.params.energy_floor * e_max;
            for (i, e) in window_energy.iter().enumerate() {
                let denom = (e + floor) * acq.template_energy;
                for (out, v) in data[i * raw.cols..(i + 1) * raw.cols].iter_mut().zip(raw.row(i + d)) {
                    *out = v * v / denom;
                }
            }
        }
        acq.normalized = Some(ScoreMatrix { rows, cols: raw.cols, data });
        Ok(())
    }

    pub fn acquisition(&self, signal: &AudioSignal) -> Result<AcquisitionMatrix> {
        let mut acq = self.raw_scores(signal)?;
        self.normalize_scores(&mut acq)?;
        Ok(acq)
    }

    /// Start of the transmission: the earliest of the `peaks` highest
    /// normalized-score peaks. Every symbol produces a peak, so `peaks` should
    /// be the number of symbols expected in the recording.
    ///
    /// The signal is preceded by `normalization_lag` zeros so that offsets
    /// shorter than the lag remain representable.
    pub fn sync(&self, signal: &AudioSignal, peaks: usize) -> Result<usize> {
        let acq = self.acquisition(&signal.padded(self.params.normalization_lag, 0))?;
        let scores = acq.normalized.as_ref().expect("normalized above").row_max();
        let found = pick_peaks(&scores, peaks.max(1), self.params.symbol_len() / 2);
        let threshold = self.params.sync_peak_ratio * dsp::median(&scores);
        let strong: Vec<usize> = found.into_iter().filter(|&i| scores[i] > 0.0 && scores[i] >= threshold).collect();
        if strong.len() < peaks.max(1) {
            return Err(Error::SyncNotFound(format!(
                "{} of {} acquisition peaks reach {:.1}x the median score",
                strong.len(),
                peaks.max(1),
                self.params.sync_peak_ratio
            )));
        }
        Ok(*strong.iter().min().expect("nonempty"))
    }

    /// Band-pass noise suppression: bins outside the band (plus guard) are
    /// removed and each in-band bin is weighted by `P / (P + η · N)`, where
    /// `N` is the median in-band bin power.
    pub fn suppress_noise(&self, signal: &AudioSignal) -> AudioSignal {
        let p = &self.params;
        let n = dsp::next_pow2(2 * signal.len().max(1));
        let mut spec = dsp::fft_real(&signal.samples, n);
        let df = signal.sample_rate_hz as f64 / n as f64;
        let (lo, hi) = (p.band_low_hz - p.guard_hz, p.band_high_hz + p.guard_hz);
        let in_band = |k: usize| {
            let f = k as f64 * df;
            f >= lo && f <= hi
        };
        let band_power: Vec<f64> = (0..=n / 2).filter(|&k| in_band(k)).map(|k| spec[k].norm_sqr()).collect();
        let floor = p.noise_floor_param * dsp::median(&band_power);
        for k in 0..=n / 2 {
            let g = if !in_band(k) {
                0.0
            } else {
                let power = spec[k].norm_sqr();
                if power + floor > 0.0 {
                    power / (power + floor)
                } else {
                    0.0
                }
            };
            spec[k] *= g;
            if k != 0 && k != n / 2 {
                spec[n - k] *= g;
            }
        }
        dsp::fft_in_place(&mut spec, true);
        AudioSignal::new(spec.iter().take(signal.len()).map(|c| c.re).collect(), signal.sample_rate_hz)
    }

    /// Strongest tone (data tones, then spacer) in the symbol starting at `start`.
    fn detect_symbol(&self, samples: &[f64], start: usize) -> Option<usize> {
        let seg = samples.get(start..start + self.params.symbol_len())?;
        let scores: Vec<f64> = self.templates.iter().map(|t| dsp::dot_conj(seg, t).norm()).collect();
        dsp::argmax(&scores)
    }

    pub fn decode(&self, signal: &AudioSignal, expected_bits: usize) -> DecodeOutcome {
        if expected_bits == 0 {
            return DecodeOutcome::FrameFailure("expected bit count must be positive".into());
        }
        let p = &self.params;
        let resampled;
        let signal = if signal.sample_rate_hz != p.output_rate_hz {
            match resample(signal, p.output_rate_hz) {
                Ok(s) => {
                    resampled = s;
                    &resampled
                }
                Err(e) => return e.into(),
            }
        } else {
            signal
        };
        let filtered = self.suppress_noise(signal);
        let tokens = self.tokens_for(expected_bits);
        let n_symbols = tokens * p.symbols_per_token();
        let start = match self.sync(&filtered, n_symbols) {
            Ok(s) => s,
            Err(e) => return e.into(),
        };

        let len = p.symbol_len();
        let mut bits = Vec::with_capacity(tokens * p.bits_per_token());
        for token in 0..tokens {
            let mut symbols = Vec::with_capacity(p.symbols_per_token());
            for k in 0..p.symbols_per_token() {
                let idx = token * p.symbols_per_token() + k;
                match self.detect_symbol(&filtered.samples, start + idx * len) {
                    Some(s) => symbols.push(s),
                    None => {
                        return DecodeOutcome::FrameFailure(format!("recording truncated at symbol {idx}"))
                    }
                }
            }
            if symbols[0] != p.spacer_index() {
                return DecodeOutcome::FrameFailure(format!("token {token}: spacer not found"));
            }
            let data = &symbols[1..=p.data_symbols_per_token];
            let parity = symbols[p.data_symbols_per_token + 1];
            if data.iter().chain([&parity]).any(|&s| s == p.spacer_index()) {
                return DecodeOutcome::FrameFailure(format!("token {token}: spacer tone inside token"));
            }
            let expected_parity = data.iter().fold(0, |acc, &s| acc ^ s);
            if parity != expected_parity {
                return DecodeOutcome::FrameFailure(format!(
                    "token {token}: parity mismatch (received {parity}, computed {expected_parity})"
                ));
            }
            for &value in data {
                for b in (0..p.bits_per_symbol).rev() {
                    bits.push((value >> b) & 1 == 1);
                }
            }
        }
        bits.truncate(expected_bits);
        DecodeOutcome::from_bits(BitMessage::new(bits))
    }
}

/// Up to `count` local peaks in descending order of score, each at least
/// `radius` samples away from every stronger peak already chosen.
fn pick_peaks(scores: &[f64], count: usize, radius: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len())
        .filter(|&i| {
            let left = i == 0 || scores[i] >= scores[i - 1];
            let right = i + 1 == scores.len() || scores[i] >= scores[i + 1];
            left && right
        })
        .collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    for i in order {
        if chosen.len() == count {
            break;
        }
        if chosen.iter().all(|&c| c.abs_diff(i) >= radius) {
            chosen.push(i);
        }
    }
    chosen
}

impl Modem for NearbyModem {
    fn id(&self) -> SchemeId {
        SchemeId::Nearby
    }

    fn sample_rate_hz(&self) -> u32 {
        self.params.output_rate_hz
    }

    fn padded_payload_bits(&self, requested: usize) -> usize {
        self.tokens_for(requested.max(1)) * self.params.bits_per_token()
    }

    fn encode(&self, msg: &BitMessage) -> Result<AudioSignal> {
        NearbyModem::encode(self, msg)
    }

    fn decode(&self, signal: &AudioSignal, expected_bits: usize) -> DecodeOutcome {
        NearbyModem::decode(self, signal, expected_bits)
    }
}
