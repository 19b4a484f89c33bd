//! Seeded acoustic channel impairments.
//!
//! Stages run in a fixed order that follows the physical path from speaker
//! to microphone:
//!
//! 1. room impulse response (sparse convolution, the reverberant tail is kept)
//! 2. device tilt (zero-phase frequency gain)
//! 3. clipping
//! 4. burst noise
//! 5. ambient recording mix
//! 6. white Gaussian noise at the requested SNR
//!
//! and the result is clamped to `[-1, 1]`. Every random stage draws from its
//! own stream derived from the config seed, so identical inputs give
//! bit-identical outputs.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audio::{db_to_amplitude, mean_power};
use crate::dsp;
use crate::resample::resample;
use crate::{AudioSignal, Error, Result};

/// Largest gain a tilt curve may request.
pub const MAX_TILT_GAIN_DB: f64 = 20.0;

/// Band of burst noise.
pub const BURST_BAND_HZ: (f64, f64) = (500.0, 20_000.0);

/// Raised-cosine edge length of each burst.
pub const BURST_EDGE_S: f64 = 0.005;

/// Samples below this level relative to the peak do not count towards the
/// signal power used for the SNR.
pub const ACTIVE_LEVEL_DB: f64 = -60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RirTap {
    pub delay_ms: f64,
    pub gain: f64,
}

/// Sparse impulse response; taps sorted by delay, the first is the direct path `(0 ms, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    taps: Vec<RirTap>,
}

impl ImpulseResponse {
    pub fn identity() -> Self {
        Self { taps: vec![RirTap { delay_ms: 0.0, gain: 1.0 }] }
    }

    /// Sorts the taps; a direct path at 0 ms with gain 1 is required.
    pub fn new(mut taps: Vec<RirTap>) -> Result<Self> {
        if taps.iter().any(|t| !(t.delay_ms >= 0.0) || !t.gain.is_finite()) {
            return Err(Error::InvalidParameter("tap delays must be >= 0 and gains finite".into()));
        }
        taps.sort_by(|a, b| a.delay_ms.total_cmp(&b.delay_ms));
        match taps.first() {
            Some(t) if t.delay_ms == 0.0 && t.gain == 1.0 => Ok(Self { taps }),
            _ => Err(Error::InvalidParameter("impulse response must start with a 0 ms tap of gain 1".into())),
        }
    }

    pub fn taps(&self) -> &[RirTap] {
        &self.taps
    }

    pub fn last_delay_ms(&self) -> f64 {
        self.taps.last().map_or(0.0, |t| t.delay_ms)
    }

    /// Dense impulse response at `rate`; delays are rounded to whole samples.
    pub fn to_samples(&self, rate: u32) -> Vec<f64> {
        let at = |ms: f64| libm::round(ms * rate as f64 / 1000.0) as usize;
        let mut h = vec![0.0; at(self.last_delay_ms()) + 1];
        for t in &self.taps {
            h[at(t.delay_ms)] += t.gain;
        }
        h
    }

    /// Fraction of tap energy strictly after `ms`, in dB (−∞ when none).
    pub fn energy_after_db(&self, ms: f64) -> f64 {
        let total: f64 = self.taps.iter().map(|t| t.gain * t.gain).sum();
        let late: f64 = self.taps.iter().filter(|t| t.delay_ms > ms).map(|t| t.gain * t.gain).sum();
        10.0 * libm::log10(late / total)
    }
}

/// Envelope of synthetic tap amplitudes: −20 dB at the delay spread.
pub fn rir_envelope_db(delay_ms: f64, delay_spread_ms: f64) -> f64 {
    -20.0 * delay_ms / delay_spread_ms
}

/// Direct path plus `density` echoes at uniform random delays in
/// `(0, delay_spread_ms]`, each with a random sign and an amplitude drawn
/// uniformly below the exponential envelope. A non-positive spread gives the
/// identity response.
pub fn synth_rir(delay_spread_ms: f64, density: usize, seed: u64) -> ImpulseResponse {
    if !(delay_spread_ms > 0.0) {
        return ImpulseResponse::identity();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taps = vec![RirTap { delay_ms: 0.0, gain: 1.0 }];
    for _ in 0..density {
        // (0, spread]: 1 - U[0, 1) never hits zero.
        let delay_ms = delay_spread_ms * (1.0 - rng.random::<f64>());
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let gain = sign * db_to_amplitude(rir_envelope_db(delay_ms, delay_spread_ms)) * rng.random::<f64>();
        taps.push(RirTap { delay_ms, gain });
    }
    ImpulseResponse::new(taps).expect("direct path present")
}

/// Convolution with the sparse response; output length = input + response − 1.
pub fn convolve_rir(signal: &AudioSignal, rir: &ImpulseResponse) -> AudioSignal {
    let h = rir.to_samples(signal.sample_rate_hz);
    let mut out = vec![0.0; signal.len() + h.len() - 1];
    for (d, &g) in h.iter().enumerate().filter(|(_, g)| **g != 0.0) {
        for (o, &x) in out[d..].iter_mut().zip(&signal.samples) {
            *o += g * x;
        }
    }
    AudioSignal::new(out, signal.sample_rate_hz)
}

/// Gain curve in dB over frequency, interpolated linearly in log-frequency and
/// held constant beyond its first and last points.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltCurve {
    points: Vec<(f64, f64)>,
}

impl TiltCurve {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|&(f, g)| !(f > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter("tilt points need positive frequencies and finite gains".into()));
        }
        if let Some(&(_, g)) = points.iter().find(|(_, g)| *g > MAX_TILT_GAIN_DB) {
            return Err(Error::TiltGainTooHigh { gain_db: g });
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { points })
    }

    /// Straight line in log-frequency from `(f0, g0)` to `(f1, g1)`.
    pub fn linear(f0: f64, g0: f64, f1: f64, g1: f64) -> Result<Self> {
        Self::new(vec![(f0, g0), (f1, g1)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// The curve with every gain negated.
    pub fn inverse(&self) -> Result<Self> {
        Self::new(self.points.iter().map(|&(f, g)| (f, -g)).collect())
    }

    pub fn gain_db(&self, freq_hz: f64) -> f64 {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if freq_hz <= first.0 {
            return first.1;
        }
        if freq_hz >= last.0 {
            return last.1;
        }
        let i = self.points.iter().position(|p| p.0 >= freq_hz).expect("inside the curve");
        let (f0, g0) = self.points[i - 1];
        let (f1, g1) = self.points[i];
        let x = libm::log(freq_hz / f0) / libm::log(f1 / f0);
        g0 + x * (g1 - g0)
    }
}

pub fn tilt_filter(signal: &AudioSignal, curve: &TiltCurve) -> AudioSignal {
    let samples = dsp::apply_frequency_gain(&signal.samples, signal.sample_rate_hz, |f| {
        db_to_amplitude(curve.gain_db(f))
    });
    AudioSignal::new(samples, signal.sample_rate_hz)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstSpec {
    pub period_s: f64,
    pub duration_s: f64,
    /// RMS level of each burst.
    pub level_dbfs: f64,
}

impl BurstSpec {
    /// `[start, end)` sample ranges of the bursts that start inside `len` samples.
    pub fn windows(&self, len: usize, rate: u32) -> Vec<(usize, usize)> {
        let period = libm::round(self.period_s * rate as f64) as usize;
        let duration = libm::round(self.duration_s * rate as f64) as usize;
        if period == 0 || duration == 0 {
            return Vec::new();
        }
        (0..len).step_by(period).map(|s| (s, (s + duration).min(len))).collect()
    }
}

/// Recorded background noise mixed in at a fixed RMS level, looped as needed.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientMix {
    pub recording: AudioSignal,
    pub level_dbfs: f64,
}

/// Parameters for drawing a fresh synthetic room response from the channel seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticRir {
    pub delay_spread_ms: f64,
    pub taps: usize,
}

impl SyntheticRir {
    pub const DEFAULT_TAPS: usize = 32;
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelConfig {
    pub id: String,
    pub snr_db: Option<f64>,
    /// Fixed room response; takes precedence over `synthetic_rir`.
    pub rir: Option<ImpulseResponse>,
    pub synthetic_rir: Option<SyntheticRir>,
    pub tilt: Option<TiltCurve>,
    pub clip_level: Option<f64>,
    pub bursts: Option<BurstSpec>,
    pub ambient: Option<AmbientMix>,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn identity() -> Self {
        Self { id: "identity".into(), ..Self::default() }
    }

    pub fn is_identity(&self) -> bool {
        self.snr_db.is_none()
            && self.rir.is_none()
            && self.synthetic_rir.is_none()
            && self.tilt.is_none()
            && self.clip_level.is_none()
            && self.bursts.is_none()
            && self.ambient.is_none()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Independent random stream for one stage.
fn stage_rng(seed: u64, stage: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage);
    rng
}

/// Mean power between the first and last sample above [`ACTIVE_LEVEL_DB`]
/// relative to the peak, so surrounding silence does not dilute the SNR.
pub fn active_power(samples: &[f64]) -> f64 {
    let peak = samples.iter().fold(0.0, |p, v| f64::max(p, libm::fabs(*v)));
    if peak == 0.0 {
        return 0.0;
    }
    let floor = peak * db_to_amplitude(ACTIVE_LEVEL_DB);
    let first = samples.iter().position(|v| libm::fabs(*v) >= floor).expect("peak qualifies");
    let last = samples.iter().rposition(|v| libm::fabs(*v) >= floor).expect("peak qualifies");
    mean_power(&samples[first..=last])
}

fn gaussian(rng: &mut ChaCha8Rng, len: usize, sigma: f64) -> Vec<f64> {
    (0..len).map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, rng)).collect()
}

fn add_bursts(samples: &mut [f64], rate: u32, spec: &BurstSpec, rng: &mut ChaCha8Rng) {
    let level = db_to_amplitude(spec.level_dbfs);
    let edge = libm::round(BURST_EDGE_S * rate as f64) as usize;
    for (start, end) in spec.windows(samples.len(), rate) {
        let len = end - start;
        let white = gaussian(rng, len, 1.0);
        let (lo, hi) = BURST_BAND_HZ;
        let mut burst = dsp::apply_frequency_gain(&white, rate, |f| if f >= lo && f <= hi { 1.0 } else { 0.0 });
        let rms = libm::sqrt(mean_power(&burst));
        if rms == 0.0 {
            continue;
        }
        let ramp = edge.min(len / 2);
        for (i, b) in burst.iter_mut().enumerate() {
            let k = i.min(len - 1 - i);
            let w = if k < ramp { 0.5 - 0.5 * libm::cos(PI * k as f64 / ramp as f64) } else { 1.0 };
            *b *= w * level / rms;
        }
        for (s, b) in samples[start..end].iter_mut().zip(&burst) {
            *s += b;
        }
    }
}

fn add_ambient(samples: &mut [f64], rate: u32, mix: &AmbientMix) {
    let recording = if mix.recording.sample_rate_hz == rate {
        mix.recording.samples.clone()
    } else {
        match resample(&mix.recording, rate) {
            Ok(r) => r.samples,
            Err(_) => return,
        }
    };
    let rms = libm::sqrt(mean_power(&recording));
    if recording.is_empty() || rms == 0.0 {
        return;
    }
    let gain = db_to_amplitude(mix.level_dbfs) / rms;
    for (s, a) in samples.iter_mut().zip(recording.iter().cycle()) {
        *s += gain * a;
    }
}

pub fn apply_channel(signal: &AudioSignal, config: &ChannelConfig) -> AudioSignal {
    let rate = signal.sample_rate_hz;
    let mut x = match (&config.rir, &config.synthetic_rir) {
        (Some(rir), _) => convolve_rir(signal, rir),
        (None, Some(s)) => {
            let seed = stage_rng(config.seed, 0).random();
            convolve_rir(signal, &synth_rir(s.delay_spread_ms, s.taps, seed))
        }
        (None, None) => signal.clone(),
    };
    if let Some(curve) = &config.tilt {
        x = tilt_filter(&x, curve);
    }
    if let Some(level) = config.clip_level {
        let level = libm::fabs(level);
        for s in x.samples.iter_mut() {
            *s = s.clamp(-level, level);
        }
    }
    let signal_power = active_power(&x.samples);
    if let Some(bursts) = &config.bursts {
        add_bursts(&mut x.samples, rate, bursts, &mut stage_rng(config.seed, 1));
    }
    if let Some(ambient) = &config.ambient {
        add_ambient(&mut x.samples, rate, ambient);
    }
    if let Some(snr) = config.snr_db {
        let sigma = libm::sqrt(signal_power / libm::pow(10.0, snr / 10.0));
        let mut rng = stage_rng(config.seed, 2);
        for s in x.samples.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *s += sigma * n;
        }
    }
    for s in x.samples.iter_mut() {
        *s = s.clamp(-1.0, 1.0);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::amplitude_to_db;
    use proptest::prelude::*;

    fn tone(freq: f64, secs: f64, amp: f64) -> AudioSignal {
        let n = (secs * 48_000.0) as usize;
        AudioSignal::new((0..n).map(|i| amp * libm::sin(2.0 * PI * freq * i as f64 / 48_000.0)).collect(), 48_000)
    }

    fn mid_rms(s: &[f64]) -> f64 {
        let n = s.len();
        libm::sqrt(mean_power(&s[n / 4..3 * n / 4]))
    }

    #[test]
    fn identity_config_is_exact() {
        let s = tone(1000.0, 0.1, 0.7);
        assert_eq!(apply_channel(&s, &ChannelConfig::identity()), s);
    }

    #[test]
    fn zero_spread_is_identity_response() {
        assert_eq!(synth_rir(0.0, 32, 1), ImpulseResponse::identity());
    }

    #[test]
    fn synthetic_rir_shape() {
        let rir = synth_rir(20.0, 32, 5);
        assert_eq!(rir, synth_rir(20.0, 32, 5));
        assert_ne!(rir, synth_rir(20.0, 32, 6));
        assert_eq!(rir.taps()[0], RirTap { delay_ms: 0.0, gain: 1.0 });
        assert!(rir.last_delay_ms() <= 20.0);
        assert!(rir.taps().windows(2).all(|w| w[0].delay_ms <= w[1].delay_ms));
        assert_eq!(rir.energy_after_db(20.0), f64::NEG_INFINITY);
        for t in &rir.taps()[1..] {
            assert!(amplitude_to_db(t.gain.abs()) <= rir_envelope_db(t.delay_ms, 20.0) + 1e-9);
        }
        // The strongest late echoes sit on the envelope: −20 dB at the spread.
        let dense = synth_rir(20.0, 4000, 9);
        let late = dense.taps().iter().filter(|t| t.delay_ms >= 19.5).map(|t| t.gain.abs()).fold(0.0, f64::max);
        assert!((amplitude_to_db(late) + 20.0).abs() <= 1.0, "{}", amplitude_to_db(late));
    }

    #[test]
    fn rir_keeps_the_tail() {
        let rir = ImpulseResponse::new(vec![
            RirTap { delay_ms: 10.0, gain: 0.5 },
            RirTap { delay_ms: 0.0, gain: 1.0 },
        ])
        .unwrap();
        let impulse = AudioSignal::new(vec![0.5, 0.0, 0.0], 48_000);
        let out = convolve_rir(&impulse, &rir);
        assert_eq!(out.len(), 3 + 480);
        assert_eq!(out.samples[0], 0.5);
        assert_eq!(out.samples[480], 0.25);
        assert!(ImpulseResponse::new(vec![RirTap { delay_ms: 1.0, gain: 1.0 }]).is_err());
    }

    #[test]
    fn tilt_curves() {
        let flat = TiltCurve::linear(9_000.0, 0.0, 16_000.0, 0.0).unwrap();
        let s = tone(12_000.0, 0.2, 0.5);
        let out = tilt_filter(&s, &flat);
        assert!(amplitude_to_db(mid_rms(&out.samples) / mid_rms(&s.samples)).abs() < 0.1);

        let curve = TiltCurve::linear(9_000.0, 0.0, 16_000.0, -12.0).unwrap();
        let probe = tone(12_500.0, 0.2, 0.5);
        let att = amplitude_to_db(mid_rms(&tilt_filter(&probe, &curve).samples) / mid_rms(&probe.samples));
        assert!((att + 6.5).abs() <= 1.0, "{att}");
        // Oracle for the curve itself: fraction of the log-frequency span.
        let x = libm::log(12_500.0 / 9_000.0) / libm::log(16_000.0 / 9_000.0);
        assert!((curve.gain_db(12_500.0) + 12.0 * x).abs() < 1e-12);
        for f in [9_000.0, 11_000.0, 14_000.0, 16_000.0] {
            let probe = tone(f, 0.2, 0.5);
            let got = amplitude_to_db(mid_rms(&tilt_filter(&probe, &curve).samples) / mid_rms(&probe.samples));
            assert!((got - curve.gain_db(f)).abs() <= 1.0, "{f}: {got}");
        }

        let round = tilt_filter(&tilt_filter(&probe, &curve), &curve.inverse().unwrap());
        assert!(amplitude_to_db(mid_rms(&round.samples) / mid_rms(&probe.samples)).abs() <= 1.0);
        assert_eq!(
            TiltCurve::linear(1_000.0, 0.0, 2_000.0, 25.0),
            Err(Error::TiltGainTooHigh { gain_db: 25.0 })
        );
    }

    #[test]
    fn bursts_follow_schedule() {
        let config = ChannelConfig {
            bursts: Some(BurstSpec { period_s: 2.0, duration_s: 0.1, level_dbfs: -6.0 }),
            seed: 3,
            ..ChannelConfig::identity()
        };
        let out = apply_channel(&AudioSignal::silence(6 * 48_000, 48_000), &config);
        let mut regions = Vec::new();
        let mut i = 0;
        while i < out.len() {
            if out.samples[i] != 0.0 {
                let start = i;
                while i < out.len() && out.samples[i] != 0.0 {
                    i += 1;
                }
                regions.push((start, i));
            }
            i += 1;
        }
        let starts: Vec<usize> = regions.iter().map(|r| r.0).collect();
        // The first raised-cosine sample is exactly zero.
        assert_eq!(starts, vec![1, 96_001, 192_001]);
        for (s, e) in regions {
            assert!(e - s <= 4_800);
            let rms = libm::sqrt(mean_power(&out.samples[s..e]));
            assert!((amplitude_to_db(rms) + 6.0).abs() < 1.0);
        }
    }

    #[test]
    fn clipping_and_clamp() {
        let config = ChannelConfig { clip_level: Some(0.25), ..ChannelConfig::identity() };
        let out = apply_channel(&tone(1_000.0, 0.05, 0.9), &config);
        assert!((out.peak() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn high_snr_tone_is_nearly_untouched() {
        let s = tone(3_000.0, 0.5, 0.5);
        let config = ChannelConfig { snr_db: Some(60.0), seed: 11, ..ChannelConfig::identity() };
        let out = apply_channel(&s, &config);
        assert!(amplitude_to_db(out.rms() / s.rms()).abs() < 0.1);
        let noise: Vec<f64> = out.samples.iter().zip(&s.samples).map(|(a, b)| a - b).collect();
        let snr = 10.0 * libm::log10(s.power() / mean_power(&noise));
        assert!((snr - 60.0).abs() < 0.5, "{snr}");
        assert_eq!(out, apply_channel(&s, &config));
    }

    #[test]
    fn ambient_is_looped_at_level() {
        let ambient = AmbientMix { recording: tone(500.0, 0.01, 1.0), level_dbfs: -20.0 };
        let config = ChannelConfig { ambient: Some(ambient), ..ChannelConfig::identity() };
        let out = apply_channel(&AudioSignal::silence(48_000, 48_000), &config);
        assert!((amplitude_to_db(out.rms()) + 20.0).abs() < 0.1);
    }

    #[test]
    fn active_power_ignores_silence() {
        let s = tone(1_000.0, 0.1, 0.5).padded(48_000, 48_000);
        assert!((active_power(&s.samples) - 0.125).abs() < 1e-3);
        assert_eq!(active_power(&[0.0; 10]), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn awgn_snr_is_accurate(snr in 0.0f64..40.0, seed: u64) {
            let s = tone(2_000.0, 0.5, 0.1);
            let config = ChannelConfig { snr_db: Some(snr), seed, ..ChannelConfig::identity() };
            let out = apply_channel(&s, &config);
            let noise: Vec<f64> = out.samples.iter().zip(&s.samples).map(|(a, b)| a - b).collect();
            let measured = 10.0 * libm::log10(s.power() / mean_power(&noise));
            prop_assert!((measured - snr).abs() <= 0.5, "{} vs {}", measured, snr);
        }

        #[test]
        fn channel_is_deterministic(seed: u64, spread in 1.0f64..30.0) {
            let s = tone(10_000.0, 0.05, 0.5);
            let config = ChannelConfig {
                rir: Some(synth_rir(spread, 16, seed)),
                snr_db: Some(10.0),
                bursts: Some(BurstSpec { period_s: 0.02, duration_s: 0.01, level_dbfs: -20.0 }),
                seed,
                ..ChannelConfig::identity()
            };
            let a = apply_channel(&s, &config);
            prop_assert_eq!(a.len(), s.len() + config.rir.as_ref().unwrap().to_samples(48_000).len() - 1);
            prop_assert!(a.in_range());
            prop_assert_eq!(a, apply_channel(&s, &config));
        }

        #[test]
        fn identity_is_exact_on_valid_signals(samples in proptest::collection::vec(-1.0f64..=1.0, 0..200)) {
            let s = AudioSignal::new(samples, 48_000);
            prop_assert_eq!(apply_channel(&s, &ChannelConfig::identity()), s);
        }
    }
}
