//! Generic restricted Boltzmann machine over binary visible units.
//!
//! The RBM defines an unnormalized probability p̃(v) whose square root is
//! the modeled wave-function amplitude. Everything here is exact: the
//! partition function and fidelities are full enumerations, feasible for
//! N ≤ 24.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{basis_masks, weight_masks, BitString, MAX_FULL_ENUMERATION_QUBITS};
use crate::dicke::DickeState;
use crate::error::{Error, Result};
use crate::jsonfmt::to_writer_sci;
use crate::math::{logistic, softplus, LogSumExp};

/// Weights and biases of one RBM: `w[[i, j]]` couples visible unit i to
/// hidden unit j.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParameters {
    w: Array2<f64>,
    a: Array1<f64>,
    b: Array1<f64>,
}

/// Provenance carried alongside exported weights.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct RbmMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

/// On-disk weight format: dimensions, row-major weights (rows = visible
/// index), biases, optional provenance.
#[derive(Debug, Serialize, Deserialize)]
struct WeightsFile {
    n_visible: usize,
    n_hidden: usize,
    w: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<RbmMetadata>,
}

impl RbmParameters {
    /// Wrap explicit parameter arrays; dimensions must agree and every
    /// entry must be finite.
    pub fn new(w: Array2<f64>, a: Array1<f64>, b: Array1<f64>) -> Result<Self> {
        let (n, m) = w.dim();
        if n == 0 || m == 0 {
            return Err(Error::Domain(format!(
                "RBM needs at least one visible and one hidden unit, got {n}x{m}"
            )));
        }
        if a.len() != n || b.len() != m {
            return Err(Error::Domain(format!(
                "bias lengths ({}, {}) do not match weight shape {n}x{m}",
                a.len(),
                b.len()
            )));
        }
        if w.iter().chain(a.iter()).chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Domain("RBM parameters must all be finite".into()));
        }
        Ok(RbmParameters { w, a, b })
    }

    /// The all-zero RBM of the given shape (uniform distribution).
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Result<Self> {
        RbmParameters::new(
            Array2::zeros((n_visible, n_hidden)),
            Array1::zeros(n_visible),
            Array1::zeros(n_hidden),
        )
    }

    pub fn n_visible(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_hidden(&self) -> usize {
        self.w.ncols()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn visible_bias(&self) -> &Array1<f64> {
        &self.a
    }

    pub fn hidden_bias(&self) -> &Array1<f64> {
        &self.b
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Array2<f64>, &mut Array1<f64>, &mut Array1<f64>) {
        (&mut self.w, &mut self.a, &mut self.b)
    }

    /// ln p̃(v) = Σ_i a_i v_i + Σ_j softplus(b_j + Σ_i W_ij v_i).
    pub fn log_unnormalized_probability(&self, v: &BitString) -> Result<f64> {
        if v.len() != self.n_visible() {
            return Err(Error::Domain(format!(
                "bitstring length {} does not match visible count {}",
                v.len(),
                self.n_visible()
            )));
        }
        Ok(self.log_prob_mask(v.to_index()))
    }

    /// ln p̃ for a basis mask (bit n−1−i of `mask` is visible unit i).
    fn log_prob_mask(&self, mask: u64) -> f64 {
        let n = self.n_visible();
        let mut theta = self.b.clone();
        let mut field = 0.0;
        for i in 0..n {
            if mask >> (n - 1 - i) & 1 == 1 {
                field += self.a[i];
                theta += &self.w.row(i);
            }
        }
        field + theta.iter().map(|&t| softplus(t)).sum::<f64>()
    }

    /// ln Z = ln Σ_v p̃(v), streamed over the full basis. Guarded at
    /// N ≤ 24.
    pub fn partition_function(&self) -> Result<f64> {
        let n = self.n_visible();
        if n > MAX_FULL_ENUMERATION_QUBITS {
            return Err(Error::Capacity(format!(
                "exact partition function supports up to {MAX_FULL_ENUMERATION_QUBITS} \
                 visible units, got {n}"
            )));
        }
        let mut lse = LogSumExp::new();
        for mask in basis_masks(n)? {
            lse.push(self.log_prob_mask(mask));
        }
        Ok(lse.total())
    }

    /// Wave-function amplitude √(p̃(v)/Z) given a previously computed
    /// ln Z. A stale `log_z` from different parameters silently skews the
    /// result; recompute after any parameter change.
    pub fn amplitude(&self, v: &BitString, log_z: f64) -> Result<f64> {
        let log_p = self.log_unnormalized_probability(v)?;
        Ok((0.5 * (log_p - log_z)).exp())
    }

    /// Squared overlap with a Dicke state, by full enumeration of the
    /// weight-D sector: (Σ_{|v|=D} √p̃(v))² / (C(N,D) · Z).
    pub fn fidelity_exact(&self, target: &DickeState) -> Result<f64> {
        let log_z = self.partition_function()?;
        self.fidelity_with_log_z(target, log_z)
    }

    /// [`fidelity_exact`](Self::fidelity_exact) with a precomputed ln Z, so
    /// one enumeration can serve both the fidelity and other diagnostics.
    /// The same staleness caveat as [`amplitude`](Self::amplitude) applies.
    pub fn fidelity_with_log_z(&self, target: &DickeState, log_z: f64) -> Result<f64> {
        let n = self.n_visible();
        if target.n_qubits() != n {
            return Err(Error::Domain(format!(
                "target has {} qubits but the RBM has {} visible units",
                target.n_qubits(),
                n
            )));
        }
        if n > MAX_FULL_ENUMERATION_QUBITS {
            return Err(Error::Capacity(format!(
                "exact fidelity supports up to {MAX_FULL_ENUMERATION_QUBITS} qubits, got {n}"
            )));
        }
        let mut lse = LogSumExp::new();
        for mask in weight_masks(n, target.dicke_index())? {
            lse.push(0.5 * self.log_prob_mask(mask));
        }
        let log_fidelity = 2.0 * lse.total() - target.log_support_size() - log_z;
        Ok(log_fidelity.exp().clamp(0.0, 1.0))
    }

    /// One block-Gibbs sweep: sample every hidden unit from σ(b + Wᵀv),
    /// then every visible unit from σ(a + Wh). Draw order is hidden
    /// 0..M then visible 0..N, so results are reproducible for a seeded
    /// RNG.
    pub fn gibbs_step(&self, v: &BitString, rng: &mut impl Rng) -> Result<BitString> {
        let n = self.n_visible();
        let m = self.n_hidden();
        if v.len() != n {
            return Err(Error::Domain(format!(
                "bitstring length {} does not match visible count {n}",
                v.len()
            )));
        }
        let mut hidden = vec![0u8; m];
        for j in 0..m {
            let mut theta = self.b[j];
            for i in 0..n {
                theta += self.w[[i, j]] * v.bit(i) as f64;
            }
            hidden[j] = (rng.gen::<f64>() < logistic(theta)) as u8;
        }
        let mut next = BitString::zeros(n)?;
        for i in 0..n {
            let mut field = self.a[i];
            for j in 0..m {
                field += self.w[[i, j]] * hidden[j] as f64;
            }
            next.set_bit(i, (rng.gen::<f64>() < logistic(field)) as u8);
        }
        Ok(next)
    }

    /// Write the weight file (see [`read_weights_file`]).
    pub fn write_weights_file(
        &self,
        path: impl AsRef<Path>,
        metadata: Option<&RbmMetadata>,
    ) -> Result<()> {
        let file = WeightsFile {
            n_visible: self.n_visible(),
            n_hidden: self.n_hidden(),
            w: self.w.rows().into_iter().map(|r| r.to_vec()).collect(),
            a: self.a.to_vec(),
            b: self.b.to_vec(),
            metadata: metadata.cloned(),
        };
        let mut w = BufWriter::new(File::create(path)?);
        to_writer_sci(&mut w, &file)?;
        w.flush()?;
        Ok(())
    }

    /// Grid of weights as CSV: one row per visible unit, one column per
    /// hidden unit.
    pub fn write_heatmap_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for row in self.w.rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Portable graymap (P2) of the weights, linearly rescaled so the
    /// minimum maps to 0 and the maximum to 255. A constant matrix maps to
    /// mid-gray.
    pub fn write_heatmap_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let lo = self.w.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "P2")?;
        writeln!(out, "# RBM weights, {} visible x {} hidden, min {lo:.6e} max {hi:.6e}",
            self.n_visible(), self.n_hidden())?;
        writeln!(out, "{} {}", self.n_hidden(), self.n_visible())?;
        writeln!(out, "255")?;
        for row in self.w.rows() {
            let cells: Vec<String> = row
                .iter()
                .map(|&x| {
                    let g = if hi > lo {
                        ((x - lo) / (hi - lo) * 255.0).round() as u32
                    } else {
                        128
                    };
                    g.min(255).to_string()
                })
                .collect();
            writeln!(out, "{}", cells.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Read a weight file written by
/// [`write_weights_file`](RbmParameters::write_weights_file), validating
/// dimensions and finiteness.
pub fn read_weights_file(path: impl AsRef<Path>) -> Result<(RbmParameters, Option<RbmMetadata>)> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let file: WeightsFile = serde_json::from_reader(reader)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if file.w.len() != file.n_visible || file.w.iter().any(|row| row.len() != file.n_hidden) {
        return Err(Error::Parse(format!(
            "{}: weight matrix shape does not match declared {}x{}",
            path.display(),
            file.n_visible,
            file.n_hidden
        )));
    }
    let mut w = Array2::zeros((file.n_visible, file.n_hidden));
    for (i, row) in file.w.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            w[[i, j]] = x;
        }
    }
    let rbm = RbmParameters::new(w, Array1::from(file.a), Array1::from(file.b))
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok((rbm, file.metadata))
}
