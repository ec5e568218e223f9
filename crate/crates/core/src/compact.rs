//! The two-parameter compact RBM and its sector phase diagrams.
//!
//! With as many hidden as visible units, diagonal coupling `w_max`, all
//! off-diagonal couplings `w_min`, and zero biases, the RBM probability of
//! a bitstring depends only on its Hamming weight d:
//!
//! ```text
//! ln p̃(d) = d · softplus(w_max + (d−1)·w_min) + (N−d) · softplus(d·w_min)
//! ```
//!
//! Every fixed-weight sector is therefore an exact Dicke state, and the
//! fidelity with each Dicke state has the closed form
//! F_D = p̃(D)·C(N,D) / Σ_d p̃(d)·C(N,d), evaluated here in log space so it
//! stays finite for |weights| up to 1e4 and N up to 1024.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::MAX_FULL_ENUMERATION_QUBITS;
use crate::error::{Error, Result};
use crate::jsonfmt::to_writer_sci;
use crate::math::{log_binomial, softplus, LogSumExp};
use crate::rbm::RbmParameters;

/// Fidelity ceiling below which a grid point is labeled "no clear sector".
pub const SECTOR_THRESHOLD: f64 = 0.5;

/// Two fidelities within this of each other count as a sector tie.
const TIE_TOLERANCE: f64 = 1e-12;

/// The compact circulant RBM: N visible and N hidden units, weight matrix
/// `w_max` on the diagonal and `w_min` everywhere else, zero biases.
///
/// The intended regime is `w_min < 0 < w_max` (opposite-sign couplings
/// carve out a single occupation sector); the constructor accepts any
/// finite pair so that degenerate corners like `w_min = w_max = 0` (the
/// uniform state) remain expressible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompactRbm {
    n_qubits: usize,
    w_min: f64,
    w_max: f64,
}

impl CompactRbm {
    pub fn new(n_qubits: usize, w_min: f64, w_max: f64) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Domain("qubit count must be positive".into()));
        }
        if !w_min.is_finite() || !w_max.is_finite() {
            return Err(Error::Domain(format!(
                "weights must be finite, got w_min={w_min}, w_max={w_max}"
            )));
        }
        Ok(CompactRbm {
            n_qubits,
            w_min,
            w_max,
        })
    }

    /// Ratio form: `w_min = −w`, `w_max = ratio·w` for a positive scale w.
    pub fn from_scale_and_ratio(n_qubits: usize, w: f64, ratio: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("scale must be positive, got {w}")));
        }
        CompactRbm::new(n_qubits, -w, ratio * w)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn w_min(&self) -> f64 {
        self.w_min
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    /// ln p̃(d), the log unnormalized probability shared by every
    /// bitstring of Hamming weight d.
    pub fn log_unnormalized_weight_probability(&self, d: usize) -> Result<f64> {
        let n = self.n_qubits;
        if d > n {
            return Err(Error::Domain(format!(
                "occupation {d} exceeds qubit count {n}"
            )));
        }
        let d_f = d as f64;
        Ok(d_f * softplus(self.w_max + (d_f - 1.0) * self.w_min)
            + (n - d) as f64 * softplus(d_f * self.w_min))
    }

    /// ln of the total sector mass ℓ_d = ln p̃(d) + ln C(N,d) for every
    /// occupation d.
    fn sector_log_masses(&self) -> Vec<f64> {
        let n = self.n_qubits;
        (0..=n)
            .map(|d| {
                self.log_unnormalized_weight_probability(d)
                    .expect("d <= n by construction")
                    + log_binomial(n as u64, d as u64).expect("d <= n")
            })
            .collect()
    }

    /// Closed-form fidelity with the weight-D Dicke state:
    /// F_D = (1 + Σ_{d≠D} exp(ℓ_d − ℓ_D))⁻¹ where ℓ_d = ln p̃(d) + ln C(N,d),
    /// evaluated as exp(ℓ_D − logsumexp(ℓ)) so huge weight scales underflow
    /// to 0 instead of overflowing.
    pub fn fidelity_analytic(&self, d: usize) -> Result<f64> {
        if d > self.n_qubits {
            return Err(Error::Domain(format!(
                "occupation {d} exceeds qubit count {}",
                self.n_qubits
            )));
        }
        Ok(self.fidelities_all()[d])
    }

    /// F_D for every D from 0 to N, sharing one normalization so the
    /// values sum to 1 up to rounding.
    pub fn fidelities_all(&self) -> Vec<f64> {
        let masses = self.sector_log_masses();
        let mut lse = LogSumExp::new();
        for &m in &masses {
            lse.push(m);
        }
        let total = lse.total();
        masses.iter().map(|&m| (m - total).exp()).collect()
    }

    /// The dominant Dicke sector at this weight point. Sectors tying
    /// within 1e-12 report the smallest D and set the tie flag; a maximum
    /// at or below `threshold` reports no sector.
    pub fn best_sector(&self, threshold: f64) -> SectorPoint {
        let fidelities = self.fidelities_all();
        let best = fidelities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut winners = (0..fidelities.len()).filter(|&d| fidelities[d] >= best - TIE_TOLERANCE);
        let first = winners.next().expect("at least one sector");
        let tie = winners.next().is_some();
        SectorPoint {
            w_min: self.w_min,
            w_max: self.w_max,
            best_d: (best > threshold).then_some(first),
            best_fidelity: best,
            tie,
        }
    }

    /// Materialize the explicit N×N weight matrix (diagonal `w_max`,
    /// off-diagonal `w_min`, zero biases) for cross-validation against the
    /// generic RBM engine. Guarded at N ≤ 24, matching what that engine
    /// can enumerate.
    pub fn export_explicit(&self) -> Result<RbmParameters> {
        let n = self.n_qubits;
        if n > MAX_FULL_ENUMERATION_QUBITS {
            return Err(Error::Capacity(format!(
                "explicit export supports up to {MAX_FULL_ENUMERATION_QUBITS} qubits, got {n}"
            )));
        }
        let w = ndarray::Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                self.w_max
            } else {
                self.w_min
            }
        });
        RbmParameters::new(w, ndarray::Array1::zeros(n), ndarray::Array1::zeros(n))
    }
}

/// The weight choice that singles out the weight-D sector:
/// `w_min = −w`, `w_max = (2D−1)·w`.
///
/// At this ratio the per-unit energy balance peaks exactly at occupation
/// D — the occupation maximizing the sector mass is K = (1 − w_max/w_min)/2,
/// so setting w_max/(−w_min) = 2D−1 puts K at D — and the fidelity rises
/// toward 1 as the scale w grows and suppresses the neighboring sectors.
pub fn optimal_weights(n_qubits: usize, dicke_index: usize, w: f64) -> Result<CompactRbm> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive, got {w}")));
    }
    if dicke_index == 0 || dicke_index >= n_qubits {
        return Err(Error::Domain(format!(
            "occupation {dicke_index} of {n_qubits} qubits is a product state; \
             the ratio rule needs 1 <= D <= N-1"
        )));
    }
    CompactRbm::new(
        n_qubits,
        -w,
        (2 * dicke_index - 1) as f64 * w,
    )
}

/// One phase-diagram grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorPoint {
    pub w_min: f64,
    pub w_max: f64,
    /// Dominant Dicke sector, or none when no fidelity clears the
    /// threshold.
    pub best_d: Option<usize>,
    pub best_fidelity: f64,
    /// Whether a second sector tied the winner within 1e-12.
    pub tie: bool,
}

/// An inclusive linearly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::Domain(format!(
                "axis endpoints must be finite, got [{min}, {max}]"
            )));
        }
        if min > max {
            return Err(Error::Domain(format!(
                "axis minimum {min} exceeds maximum {max}"
            )));
        }
        if count == 0 || (count == 1 && min != max) {
            return Err(Error::Domain(format!(
                "axis needs at least 2 points to span [{min}, {max}]"
            )));
        }
        Ok(AxisSpec { min, max, count })
    }

    /// Build from a step size; the last value is the largest
    /// `min + k·step` not exceeding `max` (within a 1e-9 relative slack).
    pub fn from_step(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Domain(format!("step must be positive, got {step}")));
        }
        if !min.is_finite() || !max.is_finite() || min > max {
            return Err(Error::Domain(format!(
                "invalid axis range [{min}, {max}]"
            )));
        }
        let count = ((max - min) / step * (1.0 + 1e-9)).floor() as usize + 1;
        AxisSpec::new(min, min + (count - 1) as f64 * step, count)
    }

    /// The i-th axis value; both endpoints are hit exactly.
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// A full w_min × w_max sector sweep, row-major over (w_min index, w_max
/// index).
#[derive(Debug, Clone)]
pub struct PhaseDiagramGrid {
    pub n_qubits: usize,
    pub threshold: f64,
    pub w_min_axis: AxisSpec,
    pub w_max_axis: AxisSpec,
    points: Vec<SectorPoint>,
}

/// Drive a sector sweep row by row: each w_min row is computed in
/// parallel, then handed to `sink` in ascending row order.
fn phase_diagram_rows(
    n_qubits: usize,
    w_min_axis: &AxisSpec,
    w_max_axis: &AxisSpec,
    threshold: f64,
    mut sink: impl FnMut(usize, Vec<SectorPoint>) -> Result<()>,
) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::Domain("qubit count must be positive".into()));
    }
    let w_max_values = w_max_axis.values();
    for i in 0..w_min_axis.count {
        let w_min = w_min_axis.value(i);
        let row: Vec<SectorPoint> = w_max_values
            .par_iter()
            .map(|&w_max| {
                CompactRbm::new(n_qubits, w_min, w_max)
                    .expect("finite axis values")
                    .best_sector(threshold)
            })
            .collect();
        sink(i, row)?;
    }
    Ok(())
}

/// Sweep the sector structure over a weight grid. Points are independent
/// and evaluated in parallel; the grid layout is deterministic row-major.
pub fn phase_diagram(
    n_qubits: usize,
    w_min_axis: &AxisSpec,
    w_max_axis: &AxisSpec,
    threshold: f64,
) -> Result<PhaseDiagramGrid> {
    let mut points = Vec::with_capacity(w_min_axis.count * w_max_axis.count);
    phase_diagram_rows(n_qubits, w_min_axis, w_max_axis, threshold, |_, row| {
        points.extend(row);
        Ok(())
    })?;
    Ok(PhaseDiagramGrid {
        n_qubits,
        threshold,
        w_min_axis: *w_min_axis,
        w_max_axis: *w_max_axis,
        points,
    })
}

/// Compute a sector sweep and stream it straight to a CSV file, one grid
/// row at a time, so fine grids never hold the whole diagram in memory.
/// Rows are `w_min,w_max,best_D,best_F` with −1 denoting "no sector".
pub fn phase_diagram_stream_csv(
    n_qubits: usize,
    w_min_axis: &AxisSpec,
    w_max_axis: &AxisSpec,
    threshold: f64,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "w_min,w_max,best_D,best_F")?;
    phase_diagram_rows(n_qubits, w_min_axis, w_max_axis, threshold, |_, row| {
        for p in row {
            write_csv_point(&mut w, &p)?;
        }
        Ok(())
    })?;
    w.flush()?;
    Ok(())
}

fn write_csv_point(w: &mut impl Write, p: &SectorPoint) -> Result<()> {
    let d = p.best_d.map_or(-1i64, |d| d as i64);
    writeln!(
        w,
        "{:.16e},{:.16e},{},{:.16e}",
        p.w_min, p.w_max, d, p.best_fidelity
    )?;
    Ok(())
}

/// Metadata written next to a phase-diagram CSV.
#[derive(Debug, Serialize)]
struct PhaseDiagramHeader<'a> {
    n_qubits: usize,
    threshold: f64,
    w_min_axis: &'a AxisSpec,
    w_max_axis: &'a AxisSpec,
    layout: &'static str,
}

/// Write the JSON header describing a sweep's axes and point layout. The
/// header depends only on the sweep parameters, so it is available to
/// streaming runs that never hold the grid.
pub fn write_phase_diagram_header(
    n_qubits: usize,
    threshold: f64,
    w_min_axis: &AxisSpec,
    w_max_axis: &AxisSpec,
    path: impl AsRef<Path>,
) -> Result<()> {
    let header = PhaseDiagramHeader {
        n_qubits,
        threshold,
        w_min_axis,
        w_max_axis,
        layout: "row-major: w_min rows ascending, w_max columns ascending",
    };
    let w = BufWriter::new(File::create(path)?);
    to_writer_sci(w, &header)
}

impl PhaseDiagramGrid {
    pub fn point(&self, i_w_min: usize, j_w_max: usize) -> &SectorPoint {
        &self.points[i_w_min * self.w_max_axis.count + j_w_max]
    }

    pub fn points(&self) -> &[SectorPoint] {
        &self.points
    }

    /// Write all grid points as CSV (`w_min,w_max,best_D,best_F`, −1 for
    /// "no sector").
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "w_min,w_max,best_D,best_F")?;
        for p in &self.points {
            write_csv_point(&mut w, p)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write the JSON header describing the axes and layout.
    pub fn write_json_header(&self, path: impl AsRef<Path>) -> Result<()> {
        write_phase_diagram_header(
            self.n_qubits,
            self.threshold,
            &self.w_min_axis,
            &self.w_max_axis,
            path,
        )
    }

    /// Render the diagram as an ASCII portable pixmap (P3).
    ///
    /// Color ramp: sector D maps to hue 300°·(D/N) through fully saturated
    /// HSV (D=0 red, rising D sweeping orange→green→blue→magenta); points
    /// with no dominant sector (best fidelity ≤ threshold) are white.
    /// Image rows run along the w_min axis ascending, columns along w_max
    /// ascending.
    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "P3")?;
        writeln!(
            w,
            "# Dicke sector map: hue 300deg*(D/{}), white = no sector above {}",
            self.n_qubits, self.threshold
        )?;
        writeln!(w, "{} {}", self.w_max_axis.count, self.w_min_axis.count)?;
        writeln!(w, "255")?;
        for i in 0..self.w_min_axis.count {
            let mut row = Vec::with_capacity(self.w_max_axis.count * 3);
            for j in 0..self.w_max_axis.count {
                let (r, g, b) = match self.point(i, j).best_d {
                    None => (255, 255, 255),
                    Some(d) => hue_ramp(d, self.n_qubits),
                };
                row.push(format!("{r} {g} {b}"));
            }
            writeln!(w, "{}", row.join("  "))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Map sector D to an RGB color: hue 300°·(D/N), full saturation/value.
fn hue_ramp(d: usize, n: usize) -> (u8, u8, u8) {
    let hue = 300.0 * d as f64 / n as f64;
    let sector = (hue / 60.0).floor() as usize % 6;
    let f = hue / 60.0 - (hue / 60.0).floor();
    let q = ((1.0 - f) * 255.0).round() as u8;
    let t = (f * 255.0).round() as u8;
    match sector {
        0 => (255, t, 0),
        1 => (q, 255, 0),
        2 => (0, 255, t),
        3 => (0, q, 255),
        4 => (t, 0, 255),
        _ => (255, 0, q),
    }
}

/// One sampled point of a fidelity path.
#[derive(Debug, Clone, Serialize)]
pub struct PathRow {
    pub t: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Fidelities aligned with the D list the path was sampled for.
    pub fidelities: Vec<f64>,
}

/// Sample F_D along the straight line from `start` to `end` in
/// (w_min, w_max) space, inclusive of both endpoints, for each D in
/// `d_list`. `samples = 1` evaluates the start point alone.
pub fn fidelity_path(
    n_qubits: usize,
    start: (f64, f64),
    end: (f64, f64),
    samples: usize,
    d_list: &[usize],
) -> Result<Vec<PathRow>> {
    if samples == 0 {
        return Err(Error::Domain("path needs at least one sample".into()));
    }
    if d_list.is_empty() {
        return Err(Error::Domain("path needs at least one Dicke index".into()));
    }
    let mut rows = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = if samples == 1 {
            0.0
        } else {
            k as f64 / (samples - 1) as f64
        };
        let w_min = start.0 + t * (end.0 - start.0);
        let w_max = start.1 + t * (end.1 - start.1);
        let rbm = CompactRbm::new(n_qubits, w_min, w_max)?;
        let all = rbm.fidelities_all();
        let fidelities = d_list
            .iter()
            .map(|&d| {
                all.get(d).copied().ok_or_else(|| {
                    Error::Domain(format!("occupation {d} exceeds qubit count {n_qubits}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(PathRow {
            t,
            w_min,
            w_max,
            fidelities,
        });
    }
    Ok(rows)
}

/// Write path rows as CSV: `t,w_min,w_max,F<d1>,F<d2>,...`.
pub fn write_path_csv(rows: &[PathRow], d_list: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let labels: Vec<String> = d_list.iter().map(|d| format!("F{d}")).collect();
    writeln!(w, "t,w_min,w_max,{}", labels.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.fidelities.iter().map(|f| format!("{f:.16e}")).collect();
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{}",
            row.t,
            row.w_min,
            row.w_max,
            cells.join(",")
        )?;
    }
    w.flush()?;
    Ok(())
}
