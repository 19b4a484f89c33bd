//! Software-defined aerial acoustic data transmission.
//!
//! Three modems share one interface: a transmitter turns a [`BitMessage`]
//! into an [`AudioSignal`], and a receiver turns a recording back into a
//! [`DecodeOutcome`].
//!
//! - [`lee`]: chirp binary orthogonal keying, 19.5–22 kHz.
//! - [`nearby`]: spread-spectrum MFSK with token framing, 18.5–20 kHz.
//! - [`priwhisper`]: calibrated 8-FSK with BCH(255,131), 9–17 kHz.
//!
//! [`channel`] simulates the acoustic path (room response, device tilt,
//! clipping, bursts, noise) and [`eval`] scores transmissions with the
//! BER / TER / PER metrics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, WAV I/O and
//! the command-line tool live in the `sonolink` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod audio;
pub mod channel;
pub mod dsp;
mod error;
pub mod eval;
pub mod lee;
pub mod nearby;
pub mod priwhisper;
pub mod resample;
pub mod scheme;

pub use audio::{AudioSignal, BitMessage, DecodeOutcome, OutcomeKind};
pub use error::{Error, Result};
pub use scheme::{Modem, SchemeId};
