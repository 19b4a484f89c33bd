//! Mono RIFF/WAVE I/O: 16- and 24-bit integer PCM and 32-bit float.

use std::io;
use std::path::Path;
use std::str::FromStr;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use sonolink_core::AudioSignal;

use crate::{Error, Result};

pub const MIN_READ_RATE_HZ: u32 = 44_100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    #[default]
    Pcm16,
    Pcm24,
    Float32,
}

impl WavEncoding {
    fn spec(self, rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            WavEncoding::Pcm16 => (16, SampleFormat::Int),
            WavEncoding::Pcm24 => (24, SampleFormat::Int),
            WavEncoding::Float32 => (32, SampleFormat::Float),
        };
        WavSpec { channels: 1, sample_rate: rate, bits_per_sample, sample_format }
    }
}

impl FromStr for WavEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pcm16" => Ok(WavEncoding::Pcm16),
            "pcm24" => Ok(WavEncoding::Pcm24),
            "float32" => Ok(WavEncoding::Float32),
            other => Err(Error::Format(format!("unknown WAV encoding `{other}` (pcm16, pcm24, float32)"))),
        }
    }
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        // hound reports a short sample read as a custom error.
        hound::Error::IoError(io)
            if io.kind() == io::ErrorKind::UnexpectedEof || io.to_string().contains("read enough bytes") =>
        {
            Error::Truncated(path.into())
        }
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::Unsupported => Error::UnsupportedEncoding(path.into(), "format not handled".into()),
        other => Error::MalformedWav(path.into(), other.to_string()),
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::MultiChannel(path.into(), spec.channels));
    }
    if spec.sample_rate < MIN_READ_RATE_HZ {
        return Err(Error::RateTooLow(path.into(), spec.sample_rate));
    }
    let declared = reader.len() as usize;
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / (1u32 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| (v as f64 * scale).min(1.0)))
                .collect::<std::result::Result<_, _>>()
        }
        (SampleFormat::Float, 32) => {
            reader.into_samples::<f32>().map(|s| s.map(f64::from)).collect::<std::result::Result<_, _>>()
        }
        (format, bits) => {
            return Err(Error::UnsupportedEncoding(path.into(), format!("{bits}-bit {format:?}")));
        }
    }
    .map_err(|e| map_hound(path, e))?;
    if samples.len() < declared {
        return Err(Error::Truncated(path.into()));
    }
    Ok(AudioSignal::new(samples, spec.sample_rate))
}

pub fn write_wav(signal: &AudioSignal, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    if !matches!(signal.sample_rate_hz, 44_100 | 48_000) {
        return Err(Error::UnsupportedOutputRate(signal.sample_rate_hz));
    }
    if let Some((index, &value)) = signal.samples.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(Error::SampleOutOfRange { index, value });
    }
    let mut writer = WavWriter::create(path, encoding.spec(signal.sample_rate_hz)).map_err(|e| map_hound(path, e))?;
    let write = |writer: &mut WavWriter<_>| -> std::result::Result<(), hound::Error> {
        match encoding {
            WavEncoding::Pcm16 => {
                for &s in &signal.samples {
                    writer.write_sample((s * 32_768.0).round().clamp(-32_768.0, 32_767.0) as i16)?;
                }
            }
            WavEncoding::Pcm24 => {
                for &s in &signal.samples {
                    writer.write_sample((s * 8_388_608.0).round().clamp(-8_388_608.0, 8_388_607.0) as i32)?;
                }
            }
            WavEncoding::Float32 => {
                for &s in &signal.samples {
                    writer.write_sample(s as f32)?;
                }
            }
        }
        Ok(())
    };
    write(&mut writer).map_err(|e| map_hound(path, e))?;
    writer.finalize().map_err(|e| map_hound(path, e))
}
