//! FFT, correlation, windows and spectral measurement.
//!
//! The FFT is a plain iterative radix-2 transform; every caller pads to a
//! power of two.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// In-place radix-2 FFT. `inverse` applies the 1/N scaling.
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "FFT length {n} is not a power of two");
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        // Twiddles recomputed per stage from sin/cos to avoid drift on long transforms.
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| {
                let a = step * k as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        for chunk in buf.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for k in 0..half {
                let t = hi[k] * twiddles[k];
                hi[k] = lo[k] - t;
                lo[k] += t;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

pub fn fft_real(samples: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, &s) in buf.iter_mut().zip(samples) {
        b.re = s;
    }
    fft_in_place(&mut buf, false);
    buf
}

/// Sliding correlation of one signal against any number of templates.
///
/// `correlate(t)[n] = Σ_j x[n + j] · conj(t[j])` for every offset where the
/// template fits entirely inside the signal.
pub struct Correlator {
    spectrum: Vec<Complex64>,
    len: usize,
}

impl Correlator {
    pub fn new(signal: &[f64]) -> Self {
        let n = next_pow2(signal.len());
        Self { spectrum: fft_real(signal, n), len: signal.len() }
    }

    pub fn signal_len(&self) -> usize {
        self.len
    }

    pub fn correlate(&self, template: &[Complex64]) -> Vec<Complex64> {
        if template.is_empty() || template.len() > self.len {
            return Vec::new();
        }
        let n = self.spectrum.len();
        let mut t = vec![Complex64::new(0.0, 0.0); n];
        t[..template.len()].copy_from_slice(template);
        fft_in_place(&mut t, false);
        for (tv, sv) in t.iter_mut().zip(&self.spectrum) {
            *tv = sv * tv.conj();
        }
        fft_in_place(&mut t, true);
        t.truncate(self.len - template.len() + 1);
        t
    }

    pub fn correlate_magnitude(&self, template: &[Complex64]) -> Vec<f64> {
        self.correlate(template).iter().map(|c| c.norm()).collect()
    }
}

/// Direct inner product `Σ x[j] · conj(t[j])` over the overlap.
pub fn dot_conj(x: &[f64], template: &[Complex64]) -> Complex64 {
    x.iter().zip(template).fold(Complex64::new(0.0, 0.0), |acc, (&s, t)| acc + t.conj() * s)
}

/// Tukey (tapered cosine) window; `alpha` is the tapered fraction of the length.
pub fn tukey(len: usize, alpha: f64) -> Vec<f64> {
    let mut w = vec![1.0; len];
    let ramp = ((alpha.clamp(0.0, 1.0) * len as f64) / 2.0) as usize;
    for i in 0..ramp {
        let v = 0.5 - 0.5 * libm::cos(PI * i as f64 / ramp as f64);
        w[i] = v;
        w[len - 1 - i] = v;
    }
    w
}

/// Zero-phase filtering by a real gain evaluated at each FFT bin frequency.
///
/// The signal is zero-padded to at least twice its length so the circular
/// response does not wrap onto the signal.
pub fn apply_frequency_gain<F>(samples: &[f64], sample_rate_hz: u32, gain: F) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Vec::new();
    }
    let n = next_pow2(2 * samples.len());
    let mut spec = fft_real(samples, n);
    let df = sample_rate_hz as f64 / n as f64;
    for k in 0..=n / 2 {
        let g = gain(k as f64 * df);
        spec[k] *= g;
        if k != 0 && k != n / 2 {
            spec[n - k] *= g;
        }
    }
    fft_in_place(&mut spec, true);
    spec.iter().take(samples.len()).map(|c| c.re).collect()
}

/// One-sided power spectrum `(bin spacing Hz, power per bin)` of a zero-padded FFT.
pub fn power_spectrum(samples: &[f64], sample_rate_hz: u32) -> (f64, Vec<f64>) {
    let n = next_pow2(2 * samples.len().max(1));
    let spec = fft_real(samples, n);
    let df = sample_rate_hz as f64 / n as f64;
    (df, spec[..=n / 2].iter().map(|c| c.norm_sqr()).collect())
}

/// Energy outside `[low_hz, high_hz]` relative to the energy inside, in dB.
pub fn out_of_band_db(samples: &[f64], sample_rate_hz: u32, low_hz: f64, high_hz: f64) -> f64 {
    let (df, power) = power_spectrum(samples, sample_rate_hz);
    let (mut inside, mut outside) = (0.0, 0.0);
    for (k, p) in power.iter().enumerate() {
        let f = k as f64 * df;
        if f >= low_hz && f <= high_hz {
            inside += p;
        } else {
            outside += p;
        }
    }
    10.0 * libm::log10(outside / inside)
}

/// Median of a slice (mean of the middle pair for even lengths). NaN-free input assumed.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Index of the largest value; the earliest one wins ties.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Complex exponential `e^{i(2π f j / fs + phase)}` for `j` in `0..len`.
pub fn complex_tone(freq_hz: f64, sample_rate_hz: u32, len: usize, phase: f64) -> Vec<Complex64> {
    let w = 2.0 * PI * freq_hz / sample_rate_hz as f64;
    (0..len)
        .map(|j| {
            let a = w * j as f64 + phase;
            Complex64::new(libm::cos(a), libm::sin(a))
        })
        .collect()
}
