//! Binary assignments and the bit-ordering convention.
//!
//! Variable `x_0` is the leftmost character of a bitstring and the least
//! significant bit of a state-vector index. Every module goes through the
//! helpers here so the convention is applied in one place.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered binary vector over the variables of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    /// Decode a state-vector index (bit `i` of `index` is `x_i`).
    pub fn from_index(index: usize, n: usize) -> Self {
        Self {
            bits: (0..n).map(|i| (index >> i) & 1 == 1).collect(),
        }
    }

    pub fn to_index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    /// Value of `x_i` as 0.0 / 1.0.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if self.bits[i] {
            1.0
        } else {
            0.0
        }
    }

    /// Spin image `z_i = 1 - 2 x_i`.
    #[inline]
    pub fn spin(&self, i: usize) -> f64 {
        if self.bits[i] {
            -1.0
        } else {
            1.0
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        if self.bits.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: self.bits.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Input(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Assignment::new)
    }
}

impl From<Assignment> for String {
    fn from(a: Assignment) -> Self {
        a.to_string()
    }
}

impl TryFrom<String> for Assignment {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Bitstring for a state-vector index without allocating an [`Assignment`].
pub fn index_to_bitstring(index: usize, n: usize) -> String {
    (0..n).map(|i| if (index >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn bitstring_to_index(s: &str) -> Result<usize> {
    s.parse::<Assignment>().map(|a| a.to_index())
}
