//! The uniform transmitter / receiver interface.

use alloc::boxed::Box;
use core::fmt;
use core::str::FromStr;

use crate::lee::LeeModem;
use crate::nearby::NearbyModem;
use crate::priwhisper::PriWhisperModem;
use crate::{AudioSignal, BitMessage, DecodeOutcome, Error, Result};

/// `wav = TX(bits)` and `bits = RX(wav)` for one modulation scheme.
pub trait Modem: Send + Sync {
    fn id(&self) -> SchemeId;

    /// Rate of emitted audio; recordings at other rates must be resampled first.
    fn sample_rate_hz(&self) -> u32;

    /// Payload size actually transmitted for a requested size, after rounding
    /// up to the scheme's frame granularity.
    fn padded_payload_bits(&self, requested: usize) -> usize;

    fn encode(&self, msg: &BitMessage) -> Result<AudioSignal>;

    fn decode(&self, signal: &AudioSignal, expected_bits: usize) -> DecodeOutcome;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Lee,
    Nearby,
    PriWhisper,
}

impl SchemeId {
    pub const ALL: [SchemeId; 3] = [SchemeId::Lee, SchemeId::Nearby, SchemeId::PriWhisper];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Lee => "lee",
            SchemeId::Nearby => "nearby",
            SchemeId::PriWhisper => "priwhisper",
        }
    }

    /// Builds the modem with its default parameters.
    pub fn modem(self) -> Box<dyn Modem> {
        match self {
            SchemeId::Lee => Box::new(LeeModem::default()),
            SchemeId::Nearby => Box::new(NearbyModem::default()),
            SchemeId::PriWhisper => Box::new(PriWhisperModem::default()),
        }
    }

    /// Emitted band edges in Hz.
    pub fn band_hz(self) -> (f64, f64) {
        match self {
            SchemeId::Lee => (19_500.0, 22_000.0),
            SchemeId::Nearby => (18_500.0, 20_000.0),
            SchemeId::PriWhisper => (9_000.0, 17_000.0),
        }
    }

    /// Repeat count per measurement condition: 100 for Lee, 20 otherwise.
    pub fn default_trials(self) -> usize {
        match self {
            SchemeId::Lee => 100,
            _ => 20,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lee" => Ok(SchemeId::Lee),
            "nearby" => Ok(SchemeId::Nearby),
            "priwhisper" => Ok(SchemeId::PriWhisper),
            other => Err(Error::InvalidParameter(alloc::format!("unknown scheme `{other}`"))),
        }
    }
}

/// Use-case payload sizes in bits.
pub mod payload {
    /// Public key or small file, near distance.
    pub const NEAR: usize = 4096;
    /// Key fingerprint or hash, medium distance.
    pub const MEDIUM: usize = 128;
    /// Short identifier, far distance.
    pub const FAR: usize = 16;
}
