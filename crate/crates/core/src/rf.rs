//! Receptive-field structure detection in weight matrices.
//!
//! A "global receptive field" means every hidden unit couples strongly to
//! exactly one visible unit and weakly, near-uniformly, to all others —
//! the structure of the compact circulant ansatz. The score defined here
//! is an artifact metric (the structure itself is qualitative): it is
//! calibrated so an exact circulant with dominant diagonal scores 1 and
//! i.i.d. Gaussian noise scores near 0, and it is invariant under
//! row/column permutations and global positive rescaling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jsonfmt::to_writer_sci;

/// Guard against zero denominators for degenerate (all-zero) units.
const EPSILON: f64 = 1e-9;

/// Per-hidden-unit receptive-field statistics.
#[derive(Debug, Clone, Serialize)]
pub struct RfUnitStats {
    pub hidden_index: usize,
    /// Visible index with the largest |coupling| (first on ties).
    pub dominant_visible: usize,
    /// Signed value of that coupling.
    pub dominant_weight: f64,
    /// Mean of the remaining couplings.
    pub residual_mean: f64,
    /// Population standard deviation of the remaining couplings.
    pub residual_std: f64,
    /// Spread-normalized separation g = gap / (gap + residual_std + ε),
    /// where gap = |dominant| − max |runner-up|.
    pub separation: f64,
    /// Unit score g · exp(−residual_std / (|residual_mean| + ε)).
    pub score: f64,
    /// Visible unit claimed in the greedy matching, if no collision.
    pub matched_visible: Option<usize>,
}

/// Receptive-field analysis of one weight matrix.
#[derive(Debug, Clone, Serialize)]
pub struct RfReport {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub units: Vec<RfUnitStats>,
    /// Mean unit score, clamped to [0, 1]. An exact circulant whose
    /// diagonal dominates (|w_max| > |w_min|) scores 1.
    pub global_score: f64,
    /// Hidden units left unmatched because their dominant visible unit
    /// was already claimed.
    pub collisions: usize,
}

impl RfReport {
    /// Matched visible unit per hidden unit (injective where `Some`).
    pub fn permutation(&self) -> Vec<Option<usize>> {
        self.units.iter().map(|u| u.matched_visible).collect()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let w = BufWriter::new(File::create(path)?);
        to_writer_sci(w, self)
    }

    /// Per-unit statistics as CSV; unmatched units carry −1.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(
            w,
            "hidden,dominant_visible,dominant_weight,residual_mean,residual_std,separation,score,matched_visible"
        )?;
        for u in &self.units {
            writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                u.hidden_index,
                u.dominant_visible,
                u.dominant_weight,
                u.residual_mean,
                u.residual_std,
                u.separation,
                u.score,
                u.matched_visible.map_or(-1i64, |v| v as i64)
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Score the receptive-field structure of an N×M weight matrix (rows =
/// visible units, columns = hidden units).
pub fn rf_score(w: &Array2<f64>) -> Result<RfReport> {
    let (n, m) = w.dim();
    if n == 0 || m == 0 {
        return Err(Error::Domain("weight matrix must be non-empty".into()));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("weight matrix must be finite".into()));
    }

    let mut units: Vec<RfUnitStats> = (0..m)
        .map(|j| {
            let column = w.column(j);
            let mut dominant = 0usize;
            for i in 1..n {
                if column[i].abs() > column[dominant].abs() {
                    dominant = i;
                }
            }
            let dominant_weight = column[dominant];
            let mut runner_up = 0.0f64;
            let mut sum = 0.0;
            for i in 0..n {
                if i != dominant {
                    runner_up = runner_up.max(column[i].abs());
                    sum += column[i];
                }
            }
            let residual_count = (n - 1).max(1) as f64;
            let residual_mean = sum / residual_count;
            let variance = (0..n)
                .filter(|&i| i != dominant)
                .map(|i| (column[i] - residual_mean).powi(2))
                .sum::<f64>()
                / residual_count;
            let residual_std = variance.sqrt();
            let gap = dominant_weight.abs() - runner_up;
            let separation = gap / (gap + residual_std + EPSILON);
            let score = separation * (-residual_std / (residual_mean.abs() + EPSILON)).exp();
            RfUnitStats {
                hidden_index: j,
                dominant_visible: dominant,
                dominant_weight,
                residual_mean,
                residual_std,
                separation,
                score,
                matched_visible: None,
            }
        })
        .collect();

    // Greedy matching: strongest dominant couplings claim their visible
    // unit first; a unit whose target is taken stays unmatched.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        units[b]
            .dominant_weight
            .abs()
            .total_cmp(&units[a].dominant_weight.abs())
            .then(a.cmp(&b))
    });
    let mut claimed = vec![false; n];
    let mut collisions = 0;
    for j in order {
        let target = units[j].dominant_visible;
        if claimed[target] {
            collisions += 1;
        } else {
            claimed[target] = true;
            units[j].matched_visible = Some(target);
        }
    }

    let global_score =
        (units.iter().map(|u| u.score).sum::<f64>() / m as f64).clamp(0.0, 1.0);
    Ok(RfReport {
        n_visible: n,
        n_hidden: m,
        units,
        global_score,
        collisions,
    })
}

/// Least-squares fit of a square weight matrix to the permuted
/// two-parameter circulant template.
#[derive(Debug, Clone, Serialize)]
pub struct RfTemplateFit {
    pub w_max_est: f64,
    pub w_min_est: f64,
    /// Matched visible unit per hidden unit (from [`rf_score`]).
    pub permutation: Vec<Option<usize>>,
    /// RMS deviation of the matrix from the fitted template.
    pub residual: f64,
    /// False when matching collisions left some units out of the
    /// template's dominant positions.
    pub complete: bool,
}

/// Fit `w` to the template "w_max at one matched position per column,
/// w_min everywhere else", using the greedy matching of [`rf_score`].
/// The residual is zero exactly when `w` is such a permuted circulant
/// with a dominant diagonal.
pub fn rf_template_fit(w: &Array2<f64>) -> Result<RfTemplateFit> {
    let (n, m) = w.dim();
    if n != m {
        return Err(Error::Domain(format!(
            "template fit needs a square matrix, got {n}x{m}"
        )));
    }
    let report = rf_score(w)?;
    let permutation = report.permutation();

    let mut diag_sum = 0.0;
    let mut diag_count = 0usize;
    let mut rest_sum = 0.0;
    let mut rest_count = 0usize;
    for j in 0..m {
        for i in 0..n {
            if permutation[j] == Some(i) {
                diag_sum += w[[i, j]];
                diag_count += 1;
            } else {
                rest_sum += w[[i, j]];
                rest_count += 1;
            }
        }
    }
    let w_max_est = if diag_count > 0 {
        diag_sum / diag_count as f64
    } else {
        0.0
    };
    let w_min_est = if rest_count > 0 {
        rest_sum / rest_count as f64
    } else {
        0.0
    };
    let mut sq_sum = 0.0;
    for j in 0..m {
        for i in 0..n {
            let template = if permutation[j] == Some(i) {
                w_max_est
            } else {
                w_min_est
            };
            sq_sum += (w[[i, j]] - template).powi(2);
        }
    }
    Ok(RfTemplateFit {
        w_max_est,
        w_min_est,
        permutation,
        residual: (sq_sum / (n * m) as f64).sqrt(),
        complete: report.collisions == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn circulant(n: usize, w_max: f64, w_min: f64) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |(i, j)| if i == j { w_max } else { w_min })
    }

    #[test]
    fn ideal_circulant_scores_one_with_identity_matching() {
        let report = rf_score(&circulant(8, 100.0, -20.0)).unwrap();
        assert_abs_diff_eq!(report.global_score, 1.0, epsilon = 1e-6);
        assert_eq!(report.collisions, 0);
        for (j, unit) in report.units.iter().enumerate() {
            assert_eq!(unit.matched_visible, Some(j));
            assert_abs_diff_eq!(unit.dominant_weight, 100.0);
        }
    }

    #[test]
    fn gaussian_noise_scores_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let w = Array2::from_shape_fn((16, 16), |_| {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            (-2.0 * u1.ln()).sqrt() * u2.cos()
        });
        let report = rf_score(&w).unwrap();
        assert!(
            report.global_score < 0.5,
            "noise scored {}",
            report.global_score
        );
    }

    #[test]
    fn score_is_invariant_under_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = Array2::from_shape_fn((6, 6), |_| rng.gen_range(-1.0..1.0));
        let base = rf_score(&w).unwrap().global_score;
        // Reverse rows and rotate columns.
        let permuted = Array2::from_shape_fn((6, 6), |(i, j)| w[[5 - i, (j + 2) % 6]]);
        let score = rf_score(&permuted).unwrap().global_score;
        assert_abs_diff_eq!(score, base, epsilon = 1e-12);
    }

    #[test]
    fn score_is_invariant_under_positive_scaling() {
        let w = circulant(8, 5.0, -1.0);
        let base = rf_score(&w).unwrap().global_score;
        let scaled = rf_score(&(&w * 37.5)).unwrap().global_score;
        assert_abs_diff_eq!(scaled, base, epsilon = 1e-6);
    }

    #[test]
    fn zero_matrix_scores_zero_not_nan() {
        let report = rf_score(&Array2::zeros((4, 4))).unwrap();
        assert_eq!(report.global_score, 0.0);
        assert!(report.units.iter().all(|u| u.score == 0.0));
        assert_eq!(report.collisions, 3);
    }

    #[test]
    fn empty_or_non_finite_matrices_are_rejected() {
        assert!(rf_score(&Array2::zeros((0, 4))).is_err());
        let mut w = Array2::zeros((2, 2));
        w[[0, 0]] = f64::INFINITY;
        assert!(rf_score(&w).is_err());
    }

    #[test]
    fn collisions_are_counted_once_per_extra_claim() {
        // Both hidden units point at visible 0; the stronger one wins.
        let mut w = Array2::zeros((3, 2));
        w[[0, 0]] = 5.0;
        w[[0, 1]] = 3.0;
        let report = rf_score(&w).unwrap();
        assert_eq!(report.collisions, 1);
        assert_eq!(report.units[0].matched_visible, Some(0));
        assert_eq!(report.units[1].matched_visible, None);
    }

    #[test]
    fn template_fit_recovers_exact_circulant() {
        let fit = rf_template_fit(&circulant(8, 7.5, -1.25)).unwrap();
        assert_abs_diff_eq!(fit.w_max_est, 7.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.w_min_est, -1.25, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.residual, 0.0, epsilon = 1e-12);
        assert!(fit.complete);
    }

    #[test]
    fn template_fit_recovers_permuted_circulant() {
        let n = 6;
        let base = circulant(n, 4.0, -0.5);
        // Shift every column's dominant row by 2.
        let shifted = Array2::from_shape_fn((n, n), |(i, j)| base[[(i + 2) % n, j]]);
        let fit = rf_template_fit(&shifted).unwrap();
        assert_abs_diff_eq!(fit.residual, 0.0, epsilon = 1e-12);
        assert!(fit.complete);
        for (j, p) in fit.permutation.iter().enumerate() {
            assert_eq!(*p, Some((n + j - 2) % n));
        }
    }

    #[test]
    fn template_fit_requires_square_input() {
        assert!(rf_template_fit(&Array2::zeros((3, 4))).is_err());
    }

    #[test]
    fn noisy_circulant_estimates_stay_close() {
        let n = 16;
        let sigma = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let clean = circulant(n, 6.0, -1.5);
        let noisy = Array2::from_shape_fn((n, n), |(i, j)| {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            clean[[i, j]] + sigma * (-2.0 * u1.ln()).sqrt() * u2.cos()
        });
        let fit = rf_template_fit(&noisy).unwrap();
        assert!(fit.complete);
        let bound = 3.0 * sigma / (n as f64).sqrt();
        assert!(
            (fit.w_max_est - 6.0).abs() < bound,
            "w_max estimate {} off by more than {bound}",
            fit.w_max_est
        );
        assert!((fit.w_min_est + 1.5).abs() < bound);
        assert!((fit.residual - sigma).abs() < 0.05);
    }

    #[test]
    fn report_exports_are_well_formed() {
        let report = rf_score(&circulant(4, 9.0, -2.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let json_path = dir.path().join("rf.json");
        let csv_path = dir.path().join("rf.csv");
        report.write_json(&json_path).unwrap();
        report.write_csv(&csv_path).unwrap();
        let parsed: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(parsed["n_hidden"], 4);
        assert_eq!(parsed["units"].as_array().unwrap().len(), 4);
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("hidden,dominant_visible,"));
    }
}
