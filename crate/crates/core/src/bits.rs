//! Finite binary strings and the fixed encodings built on top of them.
//!
//! Text form: ASCII `0`/`1`, with the empty string rendered as `^`.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// A finite binary string.
///
/// The derived ordering is lexicographic with a proper prefix sorting before
/// its extensions, so the extensions of a string occupy a contiguous range
/// starting at the string itself in any sorted collection.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn empty() -> Self {
        Self { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// `count` copies of `bit`.
    pub fn repeat(bit: bool, count: usize) -> Self {
        Self {
            bits: vec![bit; count],
        }
    }

    /// Big-endian binary rendering of `value` in exactly `width` bits.
    pub fn from_u64(value: u64, width: usize) -> Self {
        let bits = (0..width)
            .rev()
            .map(|i| if i >= 64 { false } else { (value >> i) & 1 == 1 })
            .collect();
        Self { bits }
    }

    /// Shortest big-endian binary rendering of `value` (`0` renders as `^`).
    pub fn minimal_binary(value: u64) -> Self {
        let width = (64 - value.leading_zeros()) as usize;
        Self::from_u64(value, width)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    /// `self` followed by `bit`.
    pub fn child(&self, bit: bool) -> Self {
        let mut out = self.clone();
        out.bits.push(bit);
        out
    }

    pub fn concat(&self, other: &BitString) -> Self {
        let mut out = self.clone();
        out.bits.extend_from_slice(&other.bits);
        out
    }

    /// The prefix of length `n` (σ↾n). Panics if `n > len`.
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            bits: self.bits[..n].to_vec(),
        }
    }

    /// Bits from position `from` onwards.
    pub fn suffix_from(&self, from: usize) -> Self {
        Self {
            bits: self.bits[from..].to_vec(),
        }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.bits.is_empty() {
            None
        } else {
            Some(self.prefix(self.len() - 1))
        }
    }

    /// The string differing from `self` only in its last bit.
    pub fn sibling(&self) -> Option<Self> {
        let mut out = self.clone();
        let last = out.bits.last_mut()?;
        *last = !*last;
        Some(out)
    }

    /// `self ⪯ other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len() <= other.len() && other.bits[..self.len()] == self.bits[..]
    }

    /// `self ≺ other`.
    pub fn is_proper_prefix_of(&self, other: &BitString) -> bool {
        self.len() < other.len() && self.is_prefix_of(other)
    }

    pub fn comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// All prefixes, shortest (Λ) first, including `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = BitString> + '_ {
        (0..=self.len()).map(move |n| self.prefix(n))
    }

    /// Big-endian integer value. Panics above 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len() <= 64, "bit string too long for u64");
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// First position where the two strings differ, if within both lengths.
    pub fn first_difference(&self, other: &BitString) -> Option<usize> {
        self.bits
            .iter()
            .zip(other.bits.iter())
            .position(|(a, b)| a != b)
    }

    /// Length-lexicographic index: Λ→0, 0→1, 1→2, 00→3, ...
    pub fn nat(&self) -> u64 {
        assert!(self.len() < 63, "string too long for Nat");
        (1u64 << self.len()) - 1 + self.to_u64()
    }

    /// Inverse of [`BitString::nat`].
    pub fn from_nat(n: u64) -> Self {
        let len = (64 - (n + 1).leading_zeros() - 1) as usize;
        Self::from_u64(n + 1 - (1u64 << len), len)
    }

    /// Every string of length `len`, in lexicographic order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64, "length too large to enumerate");
        (0..(1u64 << len)).map(move |v| BitString::from_u64(v, len))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.is_empty() {
            return f.write_str("^");
        }
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "^" || s.is_empty() {
            return Ok(Self::empty());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!(
                    "invalid bit {other:?} in bit string {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from_bits)
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand used throughout the tests: `bs("0110")`, `bs("^")`.
pub fn bs(s: &str) -> BitString {
    s.parse().expect("valid bit string literal")
}

/// Self-delimiting payload code: `1^|ξ| 0 ξ`.
pub fn self_delimit(payload: &BitString) -> BitString {
    let mut out = BitString::repeat(true, payload.len());
    out.push(false);
    out.extend_from(payload);
    out
}

/// Length of the self-delimiting codeword at the start of `bits`, if complete.
pub fn self_delimited_len(bits: &BitString) -> Option<usize> {
    let n = bits.iter().position(|b| !b)?;
    let total = 2 * n + 1;
    (bits.len() >= total).then_some(total)
}

/// Reads one self-delimited payload from the start of `bits`.
pub fn read_self_delimited(bits: &BitString) -> Option<(BitString, usize)> {
    let total = self_delimited_len(bits)?;
    let n = (total - 1) / 2;
    Some((bits.prefix(total).suffix_from(n + 1), total))
}

/// The tuple code ⟨a, ξ⟩: the self-delimited binary form of `a` followed by the
/// self-delimited payload. The code set is prefix-free.
pub fn encode_pair(index: u64, payload: &BitString) -> BitString {
    self_delimit(&BitString::minimal_binary(index)).concat(&self_delimit(payload))
}

/// Length of the pair codeword at the start of `bits`, if complete.
pub fn pair_len(bits: &BitString) -> Option<usize> {
    let first = self_delimited_len(bits)?;
    let second = self_delimited_len(&bits.suffix_from(first))?;
    Some(first + second)
}

/// Inverse of [`encode_pair`]; `bits` must be exactly one codeword.
pub fn decode_pair(bits: &BitString) -> Option<(u64, BitString)> {
    let (index_bits, used) = read_self_delimited(bits)?;
    if index_bits.len() > 64 {
        return None;
    }
    let (payload, used2) = read_self_delimited(&bits.suffix_from(used))?;
    if used + used2 != bits.len() {
        return None;
    }
    Some((index_bits.to_u64(), payload))
}
