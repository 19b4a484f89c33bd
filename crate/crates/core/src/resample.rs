//! Rational-ratio resampling with a Blackman-windowed sinc kernel.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{AudioSignal, Error, Result};

/// Kernel half-width in samples at the lower of the two rates (160 taps total).
const HALF_WIDTH: usize = 80;

/// Cutoff as a fraction of the lower Nyquist frequency.
const CUTOFF: f64 = 0.955;

/// Largest phase count kept in a precomputed table.
const MAX_TABLE_PHASES: u64 = 8192;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

struct Kernel {
    /// Cutoff in cycles per input sample.
    fc: f64,
    half: usize,
}

impl Kernel {
    fn new(in_rate: u32, out_rate: u32) -> Self {
        let ratio = (out_rate as f64 / in_rate as f64).min(1.0);
        Self {
            fc: 0.5 * ratio * CUTOFF,
            half: libm::ceil(HALF_WIDTH as f64 / ratio) as usize,
        }
    }

    fn eval(&self, u: f64) -> f64 {
        let x = u / self.half as f64;
        if libm::fabs(x) >= 1.0 {
            return 0.0;
        }
        let window = 0.42 + 0.5 * libm::cos(PI * x) + 0.08 * libm::cos(2.0 * PI * x);
        let arg = 2.0 * self.fc * u;
        let sinc = if libm::fabs(arg) < 1e-12 { 1.0 } else { libm::sin(PI * arg) / (PI * arg) };
        2.0 * self.fc * sinc * window
    }

    /// Taps for input samples `i0 - half + 1 ..= i0 + half` at fractional position `frac`.
    fn taps(&self, frac: f64) -> Vec<f64> {
        let mut taps: Vec<f64> =
            (0..2 * self.half).map(|k| self.eval(frac - (k as f64 - self.half as f64 + 1.0))).collect();
        let sum: f64 = taps.iter().sum();
        if sum != 0.0 {
            for t in taps.iter_mut() {
                *t /= sum;
            }
        }
        taps
    }
}

/// Converts `signal` to `new_rate_hz`, preserving duration to within one output sample.
pub fn resample(signal: &AudioSignal, new_rate_hz: u32) -> Result<AudioSignal> {
    let in_rate = signal.sample_rate_hz;
    if in_rate == 0 || new_rate_hz == 0 {
        return Err(Error::InvalidSampleRate);
    }
    if in_rate == new_rate_hz {
        return Ok(signal.clone());
    }
    let g = gcd(in_rate as u64, new_rate_hz as u64);
    let (step, phases) = (in_rate as u64 / g, new_rate_hz as u64 / g);
    let out_len = ((signal.len() as u64 * phases + step / 2) / step) as usize;
    let kernel = Kernel::new(in_rate, new_rate_hz);
    let table: Option<Vec<Vec<f64>>> = (phases <= MAX_TABLE_PHASES)
        .then(|| (0..phases).map(|r| kernel.taps(r as f64 / phases as f64)).collect());

    let x = &signal.samples;
    let half = kernel.half as i64;
    let mut out = vec![0.0; out_len];
    for (n, y) in out.iter_mut().enumerate() {
        let pos = n as u64 * step;
        let i0 = (pos / phases) as i64;
        let r = pos % phases;
        let owned;
        let taps = match &table {
            Some(t) => &t[r as usize],
            None => {
                owned = kernel.taps(r as f64 / phases as f64);
                &owned
            }
        };
        let first = i0 - half + 1;
        let mut acc = 0.0;
        for (k, &h) in taps.iter().enumerate() {
            let idx = first + k as i64;
            if idx >= 0 && (idx as usize) < x.len() {
                acc += x[idx as usize] * h;
            }
        }
        *y = acc;
    }
    Ok(AudioSignal::new(out, new_rate_hz))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, secs: f64, amp: f64) -> AudioSignal {
        let n = (secs * rate as f64) as usize;
        AudioSignal::new(
            (0..n).map(|i| amp * libm::sin(2.0 * PI * freq * i as f64 / rate as f64)).collect(),
            rate,
        )
    }

    /// RMS over the middle half, away from edge transients.
    fn mid_rms(s: &AudioSignal) -> f64 {
        let n = s.len();
        crate::audio::mean_power(&s.samples[n / 4..3 * n / 4]).sqrt()
    }

    #[test]
    fn identity_rate_is_exact() {
        let s = sine(1000.0, 48_000, 0.01, 0.5);
        assert_eq!(resample(&s, 48_000).unwrap(), s);
    }

    #[test]
    fn duration_arithmetic() {
        let s = AudioSignal::silence(480, 48_000);
        let r = resample(&s, 44_100).unwrap();
        assert!((r.len() as i64 - 441).abs() <= 1);
    }

    #[test]
    fn tone_amplitude_preserved() {
        for &f in &[1000.0, 12_000.0, 19_500.0] {
            let s = sine(f, 48_000, 0.2, 0.5);
            let r = resample(&s, 44_100).unwrap();
            let db = 20.0 * (mid_rms(&r) / mid_rms(&s)).log10();
            assert!(db.abs() < 0.5, "{f} Hz: {db} dB");
        }
    }

    #[test]
    fn round_trip_preserves_band() {
        let s = sine(15_000.0, 48_000, 0.2, 0.5);
        let back = resample(&resample(&s, 44_100).unwrap(), 48_000).unwrap();
        assert!((back.len() as i64 - s.len() as i64).abs() <= 1);
        let db = 20.0 * (mid_rms(&back) / mid_rms(&s)).log10();
        assert!(db.abs() < 1.0, "{db} dB");
    }

    #[test]
    fn rejects_zero_rate() {
        let s = AudioSignal::silence(10, 48_000);
        assert_eq!(resample(&s, 0), Err(Error::InvalidSampleRate));
    }
}
