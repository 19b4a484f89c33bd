//! Interleave, checksum and block-code chain.
//!
//! ```text
//! payload --interleave--> | interleaved payload | CRC-16 | zero pad | --> 131-bit blocks --BCH--> 255-bit blocks
//! ```

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bch::BchCode;
use crate::{BitMessage, Error, Result};

pub const CRC_BITS: usize = 16;

/// CRC-16 with the CCITT polynomial 0x1021 and initial value 0xFFFF, fed one
/// bit at a time so payloads need not be byte aligned.
pub fn crc16_bits(bits: &[bool]) -> u16 {
    let mut crc: u16 = 0xffff;
    for &b in bits {
        let top = (crc >> 15) & 1 == 1;
        crc <<= 1;
        if top ^ b {
            crc ^= 0x1021;
        }
    }
    crc
}

/// Permutation used by the interleaver for a given length; depends only on
/// `(len, seed)`.
pub fn interleaver_permutation(len: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

pub fn interleave(bits: &[bool], seed: u64) -> Vec<bool> {
    interleaver_permutation(bits.len(), seed).iter().map(|&p| bits[p]).collect()
}

pub fn deinterleave(bits: &[bool], seed: u64) -> Vec<bool> {
    let mut out = alloc::vec![false; bits.len()];
    for (&p, &b) in interleaver_permutation(bits.len(), seed).iter().zip(bits) {
        out[p] = b;
    }
    out
}

#[derive(Debug, Clone)]
pub struct FecCodec {
    code: BchCode,
    seed: u64,
}

impl FecCodec {
    pub fn new(code: BchCode, seed: u64) -> Self {
        Self { code, seed }
    }

    pub fn code(&self) -> &BchCode {
        &self.code
    }

    pub fn blocks_for(&self, payload_bits: usize) -> usize {
        (payload_bits + CRC_BITS).div_ceil(self.code.k())
    }

    /// Largest payload that fits in the blocks needed for `payload_bits`.
    pub fn padded_payload_bits(&self, payload_bits: usize) -> usize {
        self.blocks_for(payload_bits) * self.code.k() - CRC_BITS
    }

    pub fn encode(&self, payload: &BitMessage) -> Result<Vec<bool>> {
        if payload.is_empty() {
            return Err(Error::EmptyMessage);
        }
        let k = self.code.k();
        let blocks = self.blocks_for(payload.len());
        let mut data = interleave(payload.bits(), self.seed);
        let crc = crc16_bits(&data);
        data.extend((0..CRC_BITS).rev().map(|i| (crc >> i) & 1 == 1));
        data.resize(blocks * k, false);
        let mut coded = Vec::with_capacity(blocks * self.code.n());
        for block in data.chunks(k) {
            coded.extend(self.code.encode(block));
        }
        Ok(coded)
    }

    /// Inverse of [`FecCodec::encode`] for a payload of `payload_bits` bits.
    pub fn decode(&self, coded: &[bool], payload_bits: usize) -> Result<BitMessage> {
        let (n, k) = (self.code.n(), self.code.k());
        if payload_bits == 0 {
            return Err(Error::EmptyMessage);
        }
        if coded.len() % n != 0 || coded.len() / n != self.blocks_for(payload_bits) {
            return Err(Error::CodedLength(coded.len()));
        }
        let mut data = Vec::with_capacity(coded.len() / n * k);
        for (block, word) in coded.chunks(n).enumerate() {
            let mut word = word.to_vec();
            self.code.correct(&mut word).ok_or(Error::Uncorrectable { block })?;
            data.extend_from_slice(&word[..k]);
        }
        let (payload, rest) = data.split_at(payload_bits);
        let received = rest[..CRC_BITS].iter().fold(0u16, |acc, &b| (acc << 1) | b as u16);
        if received != crc16_bits(payload) {
            return Err(Error::ChecksumMismatch);
        }
        Ok(BitMessage::new(deinterleave(payload, self.seed)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::index::sample;

    fn codec() -> FecCodec {
        FecCodec::new(BchCode::bch_255_131(), 1729)
    }

    #[test]
    fn crc_matches_ccitt_false_check_value() {
        let bits = BitMessage::from_bytes_msb(b"123456789", 72).unwrap();
        assert_eq!(crc16_bits(bits.bits()), 0x29b1);
        assert_eq!(crc16_bits(&[]), 0xffff);
    }

    #[test]
    fn block_arithmetic() {
        let c = codec();
        assert_eq!(c.blocks_for(115), 1);
        assert_eq!(c.blocks_for(116), 2);
        assert_eq!(c.blocks_for(4096), 32);
        assert_eq!(c.padded_payload_bits(4096), 4176);
        let coded = c.encode(&BitMessage::zeros(115)).unwrap();
        assert_eq!(coded.len(), 255);
        assert_eq!(c.encode(&BitMessage::default()), Err(Error::EmptyMessage));
    }

    #[test]
    fn corrupted_beyond_capability_is_rejected() {
        let c = codec();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let payload = BitMessage::random(&mut rng, 200);
        let mut coded = c.encode(&payload).unwrap();
        for j in sample(&mut rng, 255, 60) {
            coded[255 + j] ^= true;
        }
        assert!(matches!(c.decode(&coded, 200), Err(Error::Uncorrectable { .. } | Error::ChecksumMismatch)));
    }

    #[test]
    fn checksum_catches_payload_substitution() {
        let c = codec();
        let coded = c.encode(&BitMessage::zeros(100)).unwrap();
        // A valid codeword carrying a different payload but the old checksum.
        let mut block: Vec<bool> = coded[..131].to_vec();
        block[0] ^= true;
        let forged = c.code().encode(&block);
        assert_eq!(c.decode(&forged, 100), Err(Error::ChecksumMismatch));
        assert_eq!(c.decode(&coded[..254], 100), Err(Error::CodedLength(254)));
    }

    proptest! {
        #[test]
        fn interleaver_is_a_permutation(bits in proptest::collection::vec(any::<bool>(), 0..600), seed: u64) {
            let shuffled = interleave(&bits, seed);
            prop_assert_eq!(shuffled.iter().filter(|b| **b).count(), bits.iter().filter(|b| **b).count());
            prop_assert_eq!(deinterleave(&shuffled, seed), bits);
        }

        #[test]
        fn fec_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..400)) {
            let c = codec();
            let msg = BitMessage::new(bits);
            let coded = c.encode(&msg).unwrap();
            prop_assert_eq!(coded.len() % 255, 0);
            prop_assert_eq!(c.decode(&coded, msg.len()).unwrap(), msg);
        }
    }
}
