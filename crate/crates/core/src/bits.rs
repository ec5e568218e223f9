//! Bitstrings and computational-basis enumeration.
//!
//! Conventions shared by the whole crate:
//! * a bitstring v = (v_1, ..., v_N) stores v_1 at index 0, and v_1 is the
//!   leftmost character of the textual form;
//! * the basis index of a bitstring is the integer whose most significant
//!   bit (of N) is v_1, so for N = 4 the string "0001" has index 1 and
//!   enumeration order is plain counting order "0000", "0001", "0010", ...

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest N for which the full 2^N basis may be enumerated.
pub const MAX_FULL_ENUMERATION_QUBITS: usize = 24;

/// An ordered sequence of N binary values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    /// Build from raw bits; every element must be 0 or 1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Domain("bitstring must be non-empty".into()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Domain("bitstring entries must be 0 or 1".into()));
        }
        Ok(BitString { bits })
    }

    /// All-zero string of length n.
    pub fn zeros(n: usize) -> Result<Self> {
        BitString::new(vec![0; n.max(1)]).and_then(|b| {
            if n == 0 {
                Err(Error::Domain("bitstring must be non-empty".into()))
            } else {
                Ok(b)
            }
        })
    }

    /// Decode a basis index (v_1 = most significant of n bits).
    pub fn from_index(index: u64, n: usize) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::Domain(format!("unsupported bitstring length {n}")));
        }
        if index >> n != 0 {
            return Err(Error::Domain(format!(
                "index {index} out of range for {n} bits"
            )));
        }
        let bits = (0..n).map(|i| ((index >> (n - 1 - i)) & 1) as u8).collect();
        Ok(BitString { bits })
    }

    /// Basis index of this string (inverse of [`BitString::from_index`]).
    pub fn to_index(&self) -> u64 {
        let n = self.len();
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << (n - 1 - i)))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of ones (Hamming weight d).
    pub fn weight(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Bit at storage position i (0-based; position 0 holds v_1).
    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub(crate) fn set_bit(&mut self, i: usize, value: u8) {
        self.bits[i] = value;
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", b)?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(Error::Parse(format!("invalid bit character '{c}' in {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        BitString::new(bits)
    }
}

/// Iterator over all n-bit basis masks in ascending index order.
pub fn basis_masks(n: usize) -> Result<impl Iterator<Item = u64>> {
    if n == 0 || n > MAX_FULL_ENUMERATION_QUBITS {
        return Err(Error::Capacity(format!(
            "full basis enumeration supports 1..={MAX_FULL_ENUMERATION_QUBITS} qubits, got {n}"
        )));
    }
    Ok(0..(1u64 << n))
}

/// Iterator over all n-bit masks of Hamming weight w, ascending index order
/// (Gosper's hack).
pub fn weight_masks(n: usize, w: usize) -> Result<impl Iterator<Item = u64>> {
    if n == 0 || n > 63 {
        return Err(Error::Domain(format!("unsupported bitstring length {n}")));
    }
    if w > n {
        return Err(Error::Domain(format!("weight {w} exceeds length {n}")));
    }
    let limit = 1u64 << n;
    let first = if w == 0 { 0 } else { (1u64 << w) - 1 };
    let mut current = Some(first);
    Ok(std::iter::from_fn(move || {
        let mask = current?;
        current = if mask == 0 {
            None
        } else {
            let c = mask & mask.wrapping_neg();
            let r = mask + c;
            let next = (((r ^ mask) >> 2) / c) | r;
            if next < limit {
                Some(next)
            } else {
                None
            }
        };
        Some(mask)
    }))
}

/// Iterator over basis bitstrings, optionally restricted to one Hamming
/// weight. See [`enumerate_basis`].
pub struct BasisIter {
    n: usize,
    inner: Box<dyn Iterator<Item = u64> + Send>,
}

impl Iterator for BasisIter {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        let mask = self.inner.next()?;
        Some(BitString::from_index(mask, self.n).expect("mask in range"))
    }
}

/// Enumerate the computational basis of n qubits, each string exactly once,
/// in ascending basis-index order.
///
/// Without a weight filter the 2^n blowup is guarded at
/// [`MAX_FULL_ENUMERATION_QUBITS`]; with `weight_filter = Some(w)` only the
/// C(n, w) strings of Hamming weight w are produced.
pub fn enumerate_basis(n: usize, weight_filter: Option<usize>) -> Result<BasisIter> {
    let inner: Box<dyn Iterator<Item = u64> + Send> = match weight_filter {
        None => Box::new(basis_masks(n)?),
        Some(w) => Box::new(weight_masks(n, w)?),
    };
    Ok(BasisIter { n, inner })
}
