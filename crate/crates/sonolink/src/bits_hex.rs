//! Bits on disk: hexadecimal text, most significant bit first in each byte.
//!
//! Whitespace is ignored. When the bit count is not a multiple of eight the
//! count is passed separately and the final byte is zero-padded.

use std::path::Path;

use sonolink_core::BitMessage;

use crate::{Error, Result};

pub fn format_bits_hex(msg: &BitMessage) -> String {
    msg.to_bytes_msb().iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses hex text; `bit_count` defaults to eight bits per byte.
pub fn parse_bits_hex(text: &str, bit_count: Option<usize>) -> Result<BitMessage> {
    let digits: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let digits = digits.strip_prefix("0x").unwrap_or(&digits);
    if digits.len() % 2 != 0 {
        return Err(Error::Format("hex bits need an even number of digits".into()));
    }
    let bytes = (0..digits.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&digits[i..i + 2], 16)
                .map_err(|_| Error::Format(format!("invalid hex digits `{}`", &digits[i..i + 2])))
        })
        .collect::<Result<Vec<u8>>>()?;
    let count = bit_count.unwrap_or(bytes.len() * 8);
    if count + 8 <= bytes.len() * 8 {
        return Err(Error::Format(format!("{} hex bytes is more than {count} bits need", bytes.len())));
    }
    Ok(BitMessage::from_bytes_msb(&bytes, count)?)
}

pub fn read_bits_hex(path: impl AsRef<Path>, bit_count: Option<usize>) -> Result<BitMessage> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_bits_hex(&text, bit_count)
}

pub fn write_bits_hex(path: impl AsRef<Path>, msg: &BitMessage) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_bits_hex(msg) + "\n").map_err(|e| Error::io(path, e))
}
