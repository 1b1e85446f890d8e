//! Shared-key modeling: a deterministic bit source with consumption
//! accounting, keyed subset selection and one-time-pad pre-encryption.
//!
//! Bits come from the ChaCha20 keystream (256-bit key = shared seed, zero
//! nonce), read MSB-first within each byte. Bit `i` of the stream depends only
//! on the seed and `i`, so any block can be positioned independently.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};

/// Extra bits drawn on top of `ceil(log2 n_max)`; bounds the modulo bias by `2^-32`.
pub const SUBSET_SLACK_BITS: u64 = 32;

/// 256-bit shared secret.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeySeed(pub [u8; 32]);

impl fmt::Debug for KeySeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeySeed({self})")
    }
}

impl fmt::Display for KeySeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl FromStr for KeySeed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != 64 || !s.is_ascii() {
            return Err(Error::Parse {
                token: s.to_string(),
                reason: "seed must be 64 hex characters".into(),
            });
        }
        let mut out = [0u8; 32];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|_| Error::Parse {
                token: s[2 * i..2 * i + 2].to_string(),
                reason: "not a hex digit pair".into(),
            })?;
        }
        Ok(KeySeed(out))
    }
}

impl Serialize for KeySeed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `B` key bits drawn once for a block, shared by every class of that block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDraw {
    value: BigUint,
    n_max: BigUint,
    bits: u64,
}

impl BlockDraw {
    /// Subset index in `[0, n_subsets)`.
    pub fn subset_index(&self, n_subsets: &BigUint) -> BigUint {
        assert!(!n_subsets.is_zero(), "n_subsets must be at least 1");
        debug_assert!(n_subsets <= &self.n_max, "n_subsets exceeds the block's n_max");
        &self.value % n_subsets
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }
}

/// `ceil(log2 n)` for `n >= 1`.
pub fn ceil_log2(n: &BigUint) -> u64 {
    assert!(!n.is_zero());
    if n.is_one() {
        0
    } else {
        (n - 1u32).bits()
    }
}

/// Bits drawn per block for a codebook whose largest partition has `n_max` subsets.
pub fn block_draw_bits(n_max: &BigUint) -> u64 {
    ceil_log2(n_max) + SUBSET_SLACK_BITS
}

/// Sequential reader over the shared key.
#[derive(Clone)]
pub struct KeyStream {
    seed: KeySeed,
    start: u64,
    position: u64,
    limit: Option<u64>,
    block: Option<BlockDraw>,
}

impl fmt::Debug for KeyStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyStream")
            .field("start", &self.start)
            .field("position", &self.position)
            .field("limit", &self.limit)
            .finish_non_exhaustive()
    }
}

impl KeyStream {
    pub fn new(seed: KeySeed) -> Self {
        Self::at(seed, 0)
    }

    /// Stream positioned at absolute bit offset `position`.
    pub fn at(seed: KeySeed, position: u64) -> Self {
        KeyStream {
            seed,
            start: position,
            position,
            limit: None,
            block: None,
        }
    }

    /// Stream that fails with key underflow after `bits` bits.
    pub fn with_budget(seed: KeySeed, bits: u64) -> Self {
        KeyStream {
            limit: Some(bits),
            ..Self::new(seed)
        }
    }

    pub fn seed(&self) -> &KeySeed {
        &self.seed
    }

    /// Absolute bit position of the next unread bit.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Bits drawn since construction.
    pub fn consumed(&self) -> u64 {
        self.position - self.start
    }

    pub fn available(&self) -> Option<u64> {
        self.limit.map(|l| l.saturating_sub(self.consumed()))
    }

    /// Next `n` bits as an integer, first bit most significant.
    pub fn next_bits(&mut self, n: u64) -> Result<BigUint> {
        if let Some(avail) = self.available() {
            if n > avail {
                return Err(Error::KeyUnderflow {
                    needed: n,
                    available: avail,
                });
            }
        }
        let v = bits_at(&self.seed, self.position, n);
        self.position += n;
        Ok(v)
    }

    /// Draws `B = ceil(log2 n_max) + 32` bits for a new block.
    pub fn draw_block(&mut self, n_max: &BigUint) -> Result<BlockDraw> {
        let bits = block_draw_bits(n_max);
        let value = self.next_bits(bits)?;
        Ok(BlockDraw {
            value,
            n_max: n_max.clone(),
            bits,
        })
    }

    /// Subset index for the current block; the block's bits are drawn on first use
    /// and reused until [`KeyStream::finish_block`].
    pub fn draw_subset_index(&mut self, n_subsets: &BigUint, n_max: &BigUint) -> Result<BigUint> {
        if n_subsets.is_zero() || n_subsets > n_max {
            return Err(domain(format!(
                "subset count {n_subsets} must lie in [1, n_max = {n_max}]"
            )));
        }
        if self.block.as_ref().is_some_and(|b| &b.n_max != n_max) {
            return Err(domain("block draw reused with a different n_max"));
        }
        if self.block.is_none() {
            self.block = Some(self.draw_block(n_max)?);
        }
        Ok(self.block.as_ref().expect("drawn").subset_index(n_subsets))
    }

    pub fn finish_block(&mut self) {
        self.block = None;
    }
}

/// `n` bits of the keystream starting at absolute bit `pos`.
pub fn bits_at(seed: &KeySeed, pos: u64, n: u64) -> BigUint {
    if n == 0 {
        return BigUint::zero();
    }
    let first_byte = pos / 8;
    let last_byte = (pos + n - 1) / 8;
    let mut bytes = vec![0u8; (last_byte - first_byte + 1) as usize];
    let mut rng = ChaCha20Rng::from_seed(seed.0);
    rng.set_word_pos(u128::from(first_byte / 4));
    let skip = (first_byte % 4) as usize;
    let mut buf = vec![0u8; skip + bytes.len()];
    rng.fill_bytes(&mut buf);
    bytes.copy_from_slice(&buf[skip..]);

    let lead = (pos % 8) as usize;
    let mut value = BigUint::from_bytes_be(&bytes);
    let total_bits = bytes.len() * 8;
    let tail = total_bits - lead - n as usize;
    value >>= tail;
    let mask = (BigUint::one() << n as usize) - 1u32;
    value & mask
}

/// XORs the `width`-bit representation of `message` with `width` fresh key bits.
pub fn otp_encrypt(message: &BigUint, width: u64, key: &mut KeyStream) -> Result<BigUint> {
    if message.bits() > width {
        return Err(domain(format!(
            "message {message} does not fit in {width} bits"
        )));
    }
    let pad = key.next_bits(width)?;
    Ok(apply_pad(message, &pad))
}

/// XOR with an explicit pad.
pub fn apply_pad(message: &BigUint, pad: &BigUint) -> BigUint {
    message ^ pad
}

/// Inverse of [`otp_encrypt`] given the same key bits.
pub fn otp_decrypt(cipher: &BigUint, width: u64, key: &mut KeyStream) -> Result<BigUint> {
    otp_encrypt(cipher, width, key)
}

/// Key accounting for one codebook.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyBudgetReport {
    /// Closed-form key bits per block, `2 N p delta log2((1-p)/p)`.
    pub k_formula: f64,
    /// Bits actually drawn by one encode.
    pub k_measured: u64,
    pub n_subsets_max: crate::prob::BigCount,
    /// `ceil(log2 n_subsets_max)`.
    pub log2_n_max_ceil: u64,
    pub delta: f64,
    pub n: usize,
    /// Extra bits per block when the message is one-time padded first.
    pub otp_bits: u64,
}
