//! Binary narrow-sense BCH codes of length 255 over GF(2^8).
//!
//! Codewords are systematic: the message bits come first, then the parity
//! bits. Bit `j` of a codeword is the coefficient of `x^(n-1-j)`.

use alloc::vec;
use alloc::vec::Vec;

/// Primitive polynomial `x^8 + x^4 + x^3 + x^2 + 1`.
pub const PRIMITIVE_POLY: u16 = 0x11d;

#[derive(Debug, Clone)]
pub struct Gf256 {
    exp: [u8; 512],
    log: [u8; 256],
}

impl Gf256 {
    pub fn new(primitive: u16) -> Self {
        let mut exp = [0u8; 512];
        let mut log = [0u8; 256];
        let mut x: u16 = 1;
        for i in 0..255 {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & 0x100 != 0 {
                x ^= primitive;
            }
        }
        for i in 255..512 {
            exp[i] = exp[i - 255];
        }
        Self { exp, log }
    }

    /// `α^e` for any exponent.
    pub fn alpha_pow(&self, e: usize) -> u8 {
        self.exp[e % 255]
    }

    pub fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    pub fn div(&self, a: u8, b: u8) -> u8 {
        assert!(b != 0, "division by zero in GF(256)");
        if a == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + 255 - self.log[b as usize] as usize]
        }
    }
}

#[derive(Debug, Clone)]
pub struct BchCode {
    n: usize,
    k: usize,
    t: usize,
    /// Generator coefficients, highest degree first.
    generator: Vec<bool>,
    gf: Gf256,
}

impl BchCode {
    /// Narrow-sense code whose generator has the roots `α^1 .. α^(2t)` and all
    /// their conjugates.
    pub fn new(t: usize) -> Self {
        let n = 255;
        let gf = Gf256::new(PRIMITIVE_POLY);
        let mut is_root = [false; 255];
        for i in 1..=2 * t {
            let mut e = i % n;
            while !is_root[e] {
                is_root[e] = true;
                e = (2 * e) % n;
            }
        }
        // Product of (x - α^e), ascending coefficients over GF(256).
        let mut poly: Vec<u8> = vec![1];
        for (e, _) in is_root.iter().enumerate().filter(|(_, r)| **r) {
            let root = gf.alpha_pow(e);
            let mut next = vec![0u8; poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i + 1] ^= c;
                next[i] ^= gf.mul(c, root);
            }
            poly = next;
        }
        assert!(poly.iter().all(|&c| c <= 1), "conjugate roots give a binary generator");
        let generator: Vec<bool> = poly.iter().rev().map(|&c| c == 1).collect();
        let k = n - (generator.len() - 1);
        Self { n, k, t, generator, gf }
    }

    /// BCH(255, 131) with designed distance 37.
    pub fn bch_255_131() -> Self {
        Self::new(18)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn generator(&self) -> &[bool] {
        &self.generator
    }

    pub fn encode(&self, msg: &[bool]) -> Vec<bool> {
        assert_eq!(msg.len(), self.k, "BCH message length");
        let mut buf = vec![false; self.n];
        buf[..self.k].copy_from_slice(msg);
        for i in 0..self.k {
            if buf[i] {
                for (b, &g) in buf[i..].iter_mut().zip(&self.generator) {
                    *b ^= g;
                }
            }
        }
        let mut out = msg.to_vec();
        out.extend_from_slice(&buf[self.k..]);
        out
    }

    /// `S_i = c(α^i)` for `i = 1 ..= 2t`.
    pub fn syndromes(&self, word: &[bool]) -> Vec<u8> {
        (1..=2 * self.t)
            .map(|i| {
                word.iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .fold(0u8, |acc, (j, _)| acc ^ self.gf.alpha_pow(i * (self.n - 1 - j)))
            })
            .collect()
    }

    /// Corrects `word` in place; returns the number of flipped bits, or
    /// `None` when the error pattern is beyond the decoder.
    pub fn correct(&self, word: &mut [bool]) -> Option<usize> {
        assert_eq!(word.len(), self.n, "BCH codeword length");
        let s = self.syndromes(word);
        if s.iter().all(|&v| v == 0) {
            return Some(0);
        }
        let gf = &self.gf;

        // Berlekamp-Massey: error locator Λ, ascending coefficients.
        let mut lambda: Vec<u8> = vec![1];
        let mut prev: Vec<u8> = vec![1];
        let (mut l, mut m, mut b) = (0usize, 1usize, 1u8);
        for r in 0..s.len() {
            let mut d = s[r];
            for i in 1..=l.min(lambda.len() - 1) {
                d ^= gf.mul(lambda[i], s[r - i]);
            }
            if d == 0 {
                m += 1;
                continue;
            }
            let coef = gf.div(d, b);
            let mut next = lambda.clone();
            if next.len() < prev.len() + m {
                next.resize(prev.len() + m, 0);
            }
            for (i, &p) in prev.iter().enumerate() {
                next[i + m] ^= gf.mul(coef, p);
            }
            if 2 * l <= r {
                prev = lambda;
                l = r + 1 - l;
                b = d;
                m = 1;
            } else {
                m += 1;
            }
            lambda = next;
        }
        if l > self.t {
            return None;
        }

        // Chien search: an error at exponent p makes Λ(α^-p) vanish.
        let mut positions = Vec::with_capacity(l);
        for p in 0..self.n {
            let inv = (self.n - p) % self.n;
            let value = lambda
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &c)| acc ^ gf.mul(c, gf.alpha_pow(inv * i)));
            if value == 0 {
                positions.push(self.n - 1 - p);
            }
        }
        if positions.len() != l {
            return None;
        }
        for &j in &positions {
            word[j] ^= true;
        }
        if self.syndromes(word).iter().any(|&v| v != 0) {
            return None;
        }
        Some(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Shift-and-add multiply modulo the primitive polynomial; shares nothing with the table code.
    fn slow_mul(mut a: u8, mut b: u8) -> u8 {
        let mut acc = 0u8;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            let carry = a & 0x80 != 0;
            a <<= 1;
            if carry {
                a ^= (PRIMITIVE_POLY & 0xff) as u8;
            }
            b >>= 1;
        }
        acc
    }

    fn slow_alpha_pow(e: usize) -> u8 {
        (0..e).fold(1u8, |acc, _| slow_mul(acc, 2))
    }

    /// Horner evaluation of the binary generator at `x`.
    fn eval_generator(g: &[bool], x: u8) -> u8 {
        g.iter().fold(0u8, |acc, &c| slow_mul(acc, x) ^ c as u8)
    }

    #[test]
    fn generator_has_degree_124_and_37_consecutive_roots() {
        let code = BchCode::bch_255_131();
        assert_eq!(code.generator().len() - 1, 124);
        assert_eq!((code.n(), code.k()), (255, 131));
        let g = code.generator();
        for i in 1..=36 {
            assert_eq!(eval_generator(g, slow_alpha_pow(i)), 0, "α^{i} must be a root");
        }
        // α^37 is not a root, so the designed distance is exactly 37 and t = 18.
        assert_ne!(eval_generator(g, slow_alpha_pow(37)), 0);
        assert_ne!(eval_generator(g, 1), 0);
    }

    #[test]
    fn table_arithmetic_matches_slow_multiply() {
        let gf = Gf256::new(PRIMITIVE_POLY);
        for a in (0..=255u8).step_by(7) {
            for b in (0..=255u8).step_by(11) {
                assert_eq!(gf.mul(a, b), slow_mul(a, b));
                if b != 0 {
                    assert_eq!(slow_mul(gf.div(a, b), b), a);
                }
            }
        }
        assert_eq!(gf.alpha_pow(255), 1);
    }

    #[test]
    fn encoded_words_have_zero_syndromes() {
        let code = BchCode::bch_255_131();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let msg: Vec<bool> = (0..131).map(|_| rng.random()).collect();
        let cw = code.encode(&msg);
        assert_eq!(&cw[..131], &msg[..]);
        assert!(code.syndromes(&cw).iter().all(|&s| s == 0));
    }

    #[test]
    fn corrects_up_to_t_errors() {
        let code = BchCode::bch_255_131();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for flips in [1, 2, 9, 17, 18] {
            for _ in 0..20 {
                let msg: Vec<bool> = (0..131).map(|_| rng.random()).collect();
                let cw = code.encode(&msg);
                let mut rx = cw.clone();
                for j in sample(&mut rng, 255, flips) {
                    rx[j] ^= true;
                }
                assert_eq!(code.correct(&mut rx), Some(flips));
                assert_eq!(rx, cw);
            }
        }
    }

    #[test]
    fn mostly_detects_t_plus_one_errors() {
        let code = BchCode::bch_255_131();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut detected = 0;
        for _ in 0..100 {
            let cw = code.encode(&(0..131).map(|_| rng.random()).collect::<Vec<_>>());
            let mut rx = cw.clone();
            for j in sample(&mut rng, 255, 19) {
                rx[j] ^= true;
            }
            if code.correct(&mut rx).is_none() {
                detected += 1;
            }
        }
        assert!(detected >= 95, "{detected}/100");
    }
}
