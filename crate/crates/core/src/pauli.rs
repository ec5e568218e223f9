//! Pauli-string expectation values evaluated as basis permutations.
//!
//! A Pauli string maps each basis state to a single basis state with a
//! phase, so ⟨ψ|P|ψ⟩ is a single O(2^N) pass with sign bookkeeping — no
//! operator matrices are ever materialized.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::statevec::StateVector;

/// A single-site spin projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Projection {
    X,
    Y,
    Z,
}

impl Projection {
    pub fn label(&self) -> char {
        match self {
            Projection::X => 'x',
            Projection::Y => 'y',
            Projection::Z => 'z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'x' => Ok(Projection::X),
            'y' => Ok(Projection::Y),
            'z' => Ok(Projection::Z),
            _ => Err(Error::Parse(format!(
                "invalid projection '{c}', expected x, y or z"
            ))),
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Projection::from_char(c),
            _ => Err(Error::Parse(format!(
                "invalid projection {s:?}, expected one of x, y, z"
            ))),
        }
    }
}

/// A product of single-site Pauli operators on distinct sites.
///
/// Site indices are 1-based and strictly increasing; between one and four
/// factors are supported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    terms: Vec<(usize, Projection)>,
}

impl PauliString {
    pub fn new(terms: Vec<(usize, Projection)>) -> Result<Self> {
        if terms.is_empty() || terms.len() > 4 {
            return Err(Error::Domain(format!(
                "Pauli strings carry 1..=4 factors, got {}",
                terms.len()
            )));
        }
        for pair in terms.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Domain(format!(
                    "site indices must be strictly increasing, got {} after {}",
                    pair[1].0, pair[0].0
                )));
            }
        }
        if terms[0].0 == 0 {
            return Err(Error::Domain("site indices are 1-based".into()));
        }
        Ok(PauliString { terms })
    }

    /// Build from a projection label and matching site list, e.g.
    /// `("xz", [1, 4])`.
    pub fn from_label(label: &str, sites: &[usize]) -> Result<Self> {
        let projections: Vec<Projection> = label
            .chars()
            .map(Projection::from_char)
            .collect::<Result<_>>()?;
        if projections.len() != sites.len() {
            return Err(Error::Domain(format!(
                "label {label:?} has {} projections but {} sites were given",
                projections.len(),
                sites.len()
            )));
        }
        let mut terms: Vec<(usize, Projection)> =
            sites.iter().copied().zip(projections).collect();
        terms.sort_by_key(|&(site, _)| site);
        PauliString::new(terms)
    }

    pub fn terms(&self) -> &[(usize, Projection)] {
        &self.terms
    }

    pub fn label(&self) -> String {
        self.terms.iter().map(|(_, p)| p.label()).collect()
    }

    pub fn sites(&self) -> Vec<usize> {
        self.terms.iter().map(|&(site, _)| site).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(site, p)| format!("{p}{site}"))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// ⟨ψ|P|ψ⟩ for a real state vector.
///
/// Convention: bit value 0 is the +1 eigenstate of σ^z; σ^x flips the bit;
/// σ^y flips the bit with phase +i on 0→1 and −i on 1→0. A string with an
/// odd number of y factors has purely imaginary matrix elements between
/// real vectors, so the expectation is returned as exact 0. Positive and
/// negative contributions accumulate separately so that symmetric spectra
/// cancel to exact 0 rather than rounding noise.
pub fn pauli_expectation(psi: &StateVector, p: &PauliString) -> Result<f64> {
    let n = psi.n_qubits();
    let mut flip_mask = 0u64;
    let mut z_mask = 0u64;
    let mut y_mask = 0u64;
    for &(site, projection) in p.terms() {
        if site > n {
            return Err(Error::Domain(format!(
                "site {site} out of range for {n} qubits"
            )));
        }
        // Site i (1-based, v_1 leftmost) sits at mask bit n - i.
        let bit = 1u64 << (n - site);
        match projection {
            Projection::X => flip_mask |= bit,
            Projection::Y => {
                flip_mask |= bit;
                y_mask |= bit;
            }
            Projection::Z => z_mask |= bit,
        }
    }
    if (y_mask.count_ones() & 1) == 1 {
        return Ok(0.0);
    }

    let amplitudes = psi.amplitudes();
    let mut positive = 0.0f64;
    let mut negative = 0.0f64;
    for (index, &amp) in amplitudes.iter().enumerate() {
        let mask = index as u64;
        let partner = amplitudes[(mask ^ flip_mask) as usize];
        let term = amp * partner;
        if term == 0.0 {
            continue;
        }
        // σ^z contributes (−1) per set bit; the y factors contribute
        // i^(#{0→1}) · (−i)^(#{1→0}), which for an even y count is real:
        // i^(y_zeros − y_ones) = (−1)^((y_zeros − y_ones)/2 mod 2).
        let z_sign = (mask & z_mask).count_ones() & 1;
        let y_zeros = (!mask & y_mask).count_ones() as i32;
        let y_ones = (mask & y_mask).count_ones() as i32;
        let y_sign = (((y_zeros - y_ones) / 2).rem_euclid(2)) as u32;
        let negate = (z_sign + y_sign) & 1 == 1;
        if negate != term.is_sign_negative() {
            negative += term.abs();
        } else {
            positive += term.abs();
        }
    }
    Ok(positive - negative)
}
