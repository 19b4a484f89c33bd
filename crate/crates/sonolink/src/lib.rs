//! File formats, WAV I/O, parallel trials and the `sonolink` command-line tool
//! around the `sonolink-core` modems.

pub mod bits_hex;
pub mod channel_cfg;
pub mod cli;
mod error;
pub mod replay;
pub mod trials;
pub mod wav;

pub use error::{Error, Result};
pub use sonolink_core as core;
