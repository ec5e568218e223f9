//! Ursell (connected) correlation functions of orders 1–4.
//!
//! The connected part of a multi-site Pauli correlation subtracts every
//! factorization over proper subsets; orders beyond two mix several such
//! terms with fixed coefficients. The histograms over all projection
//! labels reproduce the correlation structure that distinguishes Dicke
//! states with different excitation numbers.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dicke::DickeState;
use crate::error::{Error, Result};
use crate::jsonfmt::to_writer_sci;
use crate::pauli::{pauli_expectation, PauliString, Projection};
use crate::statevec::StateVector;

/// Correlation values closer than this are reported as one degenerate level.
pub const LEVEL_MERGE_TOLERANCE: f64 = 1e-9;

/// Values within this of zero fall into the "all zero" bucket.
const ZERO_TOLERANCE: f64 = 1e-9;

/// Number of random site tuples used in the symmetry audit.
const AUDIT_TUPLES: usize = 10;

/// Seed of the internal RNG that draws audit tuples (fixed so reports are
/// reproducible).
const AUDIT_SEED: u64 = 0x5053_4155_4449_5431;

/// Connected correlation of the given projections on the given sites.
///
/// `sites[k]` carries projection `label[k]`; sites must be distinct (order
/// is free), and the order — the shared length — must be 1 to 4. Labels
/// with an odd number of y factors vanish identically on real states and
/// return exact 0.
pub fn ursell(psi: &StateVector, sites: &[usize], label: &str) -> Result<f64> {
    let projections: Vec<Projection> = label
        .chars()
        .map(Projection::from_char)
        .collect::<Result<_>>()?;
    let order = sites.len();
    if order != projections.len() {
        return Err(Error::Domain(format!(
            "{} sites but {} projections",
            order,
            projections.len()
        )));
    }
    if !(1..=4).contains(&order) {
        return Err(Error::Domain(format!(
            "correlation order must be 1..=4, got {order}"
        )));
    }
    for (i, a) in sites.iter().enumerate() {
        if sites[..i].contains(a) {
            return Err(Error::Domain(format!("repeated site {a}")));
        }
    }
    if projections.iter().filter(|p| **p == Projection::Y).count() % 2 == 1 {
        return Ok(0.0);
    }
    let pairs: Vec<(usize, Projection)> =
        sites.iter().copied().zip(projections).collect();
    let expectation = |mask: u8| -> Result<f64> {
        let mut subset: Vec<(usize, Projection)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, pair)| *pair)
            .collect();
        subset.sort_by_key(|&(site, _)| site);
        pauli_expectation(psi, &PauliString::new(subset)?)
    };
    let mut values = [0.0f64; 16];
    for mask in 1u8..(1 << order) {
        values[mask as usize] = expectation(mask)?;
    }
    Ok(connected_combination(order, &|m| values[m as usize]))
}

/// The order-1..4 connected combination over subset expectations.
///
/// `e(mask)` returns the plain expectation of the subset of tuple positions
/// selected by `mask` (bit k = position k).
fn connected_combination(order: usize, e: &dyn Fn(u8) -> f64) -> f64 {
    match order {
        1 => e(0b1),
        2 => e(0b11) - e(0b01) * e(0b10),
        3 => {
            e(0b111)
                - e(0b001) * e(0b110)
                - e(0b010) * e(0b101)
                - e(0b100) * e(0b011)
                + 2.0 * e(0b001) * e(0b010) * e(0b100)
        }
        4 => {
            e(0b1111)
                - e(0b0001) * e(0b1110)
                - e(0b0010) * e(0b1101)
                - e(0b0100) * e(0b1011)
                - e(0b1000) * e(0b0111)
                - e(0b0011) * e(0b1100)
                - e(0b0101) * e(0b1010)
                - e(0b1001) * e(0b0110)
                + 2.0 * e(0b0011) * e(0b0100) * e(0b1000)
                + 2.0 * e(0b0101) * e(0b0010) * e(0b1000)
                + 2.0 * e(0b1001) * e(0b0010) * e(0b0100)
                + 2.0 * e(0b0110) * e(0b0001) * e(0b1000)
                + 2.0 * e(0b1010) * e(0b0001) * e(0b0100)
                + 2.0 * e(0b1100) * e(0b0001) * e(0b0010)
                - 6.0 * e(0b0001) * e(0b0010) * e(0b0100) * e(0b1000)
        }
        _ => unreachable!("order validated by callers"),
    }
}

/// One evaluated correlation: a projection label on a concrete site tuple.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationEntry {
    pub label: String,
    pub sites: Vec<usize>,
    pub value: f64,
}

/// A degenerate level: labels whose correlation values coincide within
/// [`LEVEL_MERGE_TOLERANCE`].
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationLevel {
    pub value: f64,
    pub multiplicity: usize,
    pub labels: Vec<String>,
}

/// All order-k connected correlations of one Dicke state, with degeneracy
/// structure and a site-exchange symmetry audit.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub n_qubits: usize,
    pub dicke_index: usize,
    pub order: usize,
    /// One entry per projection label, all on the representative tuple
    /// (1, …, order).
    pub entries: Vec<CorrelationEntry>,
    /// Distinct non-zero value levels, descending by value.
    pub levels: Vec<CorrelationLevel>,
    /// Labels whose correlation vanishes (the "all" bucket).
    pub zero_labels: Vec<String>,
    /// Largest deviation of any label's value on a random distinct site
    /// tuple from its representative value.
    pub audit_max_deviation: f64,
    /// The random site tuples used in the audit.
    pub audit_tuples: Vec<Vec<usize>>,
}

/// All projection labels of the given order, lexicographic in x < y < z.
pub fn projection_labels(order: usize) -> Vec<String> {
    let mut labels = vec![String::new()];
    for _ in 0..order {
        labels = labels
            .iter()
            .flat_map(|prefix| {
                ['x', 'y', 'z'].iter().map(move |c| {
                    let mut s = prefix.clone();
                    s.push(*c);
                    s
                })
            })
            .collect();
    }
    labels
}

/// Evaluate every projection label of the given order on one Dicke state.
///
/// Expectations are computed once per (site subset, projection assignment)
/// pair and shared across labels. A symmetry audit re-evaluates every
/// label on [`AUDIT_TUPLES`] random distinct site tuples and records the
/// worst disagreement with the representative tuple.
pub fn correlation_histogram(state: &DickeState, order: usize) -> Result<CorrelationReport> {
    if !(1..=4).contains(&order) {
        return Err(Error::Domain(format!(
            "correlation order must be 1..=4, got {order}"
        )));
    }
    let n = state.n_qubits();
    if order > n {
        return Err(Error::Domain(format!(
            "order {order} needs {order} distinct sites but only {n} qubits exist"
        )));
    }
    let psi = StateVector::from_dicke(state)?;
    let labels = projection_labels(order);

    let representative: Vec<usize> = (1..=order).collect();
    let reference = evaluate_labels(&psi, &representative, &labels)?;
    let entries: Vec<CorrelationEntry> = labels
        .iter()
        .zip(&reference)
        .map(|(label, &value)| CorrelationEntry {
            label: label.clone(),
            sites: representative.clone(),
            value,
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    let mut audit_tuples = Vec::with_capacity(AUDIT_TUPLES);
    for _ in 0..AUDIT_TUPLES {
        let mut positions: Vec<usize> = (1..=n).collect();
        for i in 0..order {
            let j = rng.gen_range(i..n);
            positions.swap(i, j);
        }
        positions.truncate(order);
        audit_tuples.push(positions);
    }
    let mut audit_max_deviation = 0.0f64;
    for tuple in &audit_tuples {
        let audited = evaluate_labels(&psi, tuple, &labels)?;
        for (&a, &r) in audited.iter().zip(&reference) {
            audit_max_deviation = audit_max_deviation.max((a - r).abs());
        }
    }

    let mut zero_labels = Vec::new();
    let mut nonzero: Vec<(f64, String)> = Vec::new();
    for entry in &entries {
        if entry.value.abs() <= ZERO_TOLERANCE {
            zero_labels.push(entry.label.clone());
        } else {
            nonzero.push((entry.value, entry.label.clone()));
        }
    }
    nonzero.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut levels: Vec<CorrelationLevel> = Vec::new();
    for (value, label) in nonzero {
        match levels.last_mut() {
            Some(level) if (level.value - value).abs() <= LEVEL_MERGE_TOLERANCE => {
                level.multiplicity += 1;
                level.labels.push(label);
            }
            _ => levels.push(CorrelationLevel {
                value,
                multiplicity: 1,
                labels: vec![label],
            }),
        }
    }

    Ok(CorrelationReport {
        n_qubits: n,
        dicke_index: state.dicke_index(),
        order,
        entries,
        levels,
        zero_labels,
        audit_max_deviation,
        audit_tuples,
    })
}

/// Γ for every label on one site tuple, sharing subset expectations.
fn evaluate_labels(psi: &StateVector, sites: &[usize], labels: &[String]) -> Result<Vec<f64>> {
    let order = sites.len();
    // Key: subset mask in the low 4 bits, then 2 bits per position giving
    // the projection (x=0, y=1, z=2; positions outside the mask stay 0).
    let mut keys: Vec<u16> = Vec::new();
    for mask in 1u16..(1 << order) {
        let positions: Vec<usize> = (0..order).filter(|k| mask >> k & 1 == 1).collect();
        let mut stack = vec![(0usize, 0u16)];
        while let Some((depth, packed)) = stack.pop() {
            if depth == positions.len() {
                keys.push(mask | packed << 4);
                continue;
            }
            for code in 0..3u16 {
                stack.push((depth + 1, packed | code << (2 * positions[depth])));
            }
        }
    }
    let computed: Vec<(u16, f64)> = keys
        .par_iter()
        .map(|&key| {
            let mask = key & 0xF;
            let mut subset = Vec::new();
            for k in 0..order {
                if mask >> k & 1 == 1 {
                    let code = key >> (4 + 2 * k) & 0b11;
                    let projection = match code {
                        0 => Projection::X,
                        1 => Projection::Y,
                        _ => Projection::Z,
                    };
                    subset.push((sites[k], projection));
                }
            }
            subset.sort_by_key(|&(site, _)| site);
            let value = pauli_expectation(psi, &PauliString::new(subset)?)?;
            Ok((key, value))
        })
        .collect::<Result<_>>()?;
    let cache: HashMap<u16, f64> = computed.into_iter().collect();

    labels
        .iter()
        .map(|label| {
            let projections: Vec<Projection> = label
                .chars()
                .map(Projection::from_char)
                .collect::<Result<_>>()?;
            if projections.iter().filter(|p| **p == Projection::Y).count() % 2 == 1 {
                return Ok(0.0);
            }
            let codes: Vec<u16> = projections
                .iter()
                .map(|p| match p {
                    Projection::X => 0,
                    Projection::Y => 1,
                    Projection::Z => 2,
                })
                .collect();
            let e = |mask: u8| -> f64 {
                let mut packed = 0u16;
                for k in 0..order {
                    if mask >> k & 1 == 1 {
                        packed |= codes[k] << (2 * k);
                    }
                }
                cache[&(mask as u16 | packed << 4)]
            };
            Ok(connected_combination(order, &e))
        })
        .collect()
}

impl CorrelationReport {
    /// Largest |Γ| over all labels (0 when everything vanishes).
    pub fn max_abs_value(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.value.abs())
            .fold(0.0, f64::max)
    }

    /// Value for one projection label on the representative tuple.
    pub fn value(&self, label: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.value)
    }

    /// Write all entries as CSV rows `order,label,sites,value` with sites
    /// dash-joined (e.g. `1-2-3`).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "order,label,sites,value")?;
        for entry in &self.entries {
            let sites: Vec<String> = entry.sites.iter().map(|s| s.to_string()).collect();
            writeln!(
                w,
                "{},{},{},{:.16e}",
                self.order,
                entry.label,
                sites.join("-"),
                entry.value
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write the level/degeneracy summary as JSON.
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let w = BufWriter::new(File::create(path)?);
        to_writer_sci(w, self)
    }
}
