//! Contrastive-divergence tomography training.
//!
//! The trainer fits an RBM to measured bitstrings by stochastic gradient
//! ascent on the data log-likelihood. Positive-phase statistics use exact
//! hidden means (Rao–Blackwellized); the negative phase runs a k-step
//! block-Gibbs chain started at the data batch and uses sampled states.
//! Runs are bitwise-deterministic for a fixed seed: one RNG drives weight
//! init, epoch shuffles, and every Bernoulli draw in a pinned order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dicke::{DickeState, SampleSet};
use crate::error::{Error, Result};
use crate::math::logistic;
use crate::rbm::RbmParameters;

/// Half-width of the uniform weight initialization; biases start at zero.
const INIT_SCALE: f64 = 0.05;

/// Exact log Z (and hence NLL) is tracked during training up to this many
/// visible units; training itself has no size limit.
const MAX_TRACKED_LOG_Z_QUBITS: usize = 20;

/// Which per-epoch metric selects the returned snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckpointMetric {
    /// Maximize fidelity against the training target (requires a target).
    Fidelity,
    /// Minimize the training-set negative log-likelihood.
    Kl,
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub cd_steps: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub checkpoint_metric: CheckpointMetric,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            cd_steps: 10,
            learning_rate: 0.1,
            epochs: 2000,
            batch_size: 100,
            seed: 0,
            checkpoint_metric: CheckpointMetric::Fidelity,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cd_steps == 0 {
            return Err(Error::Domain("cd_steps must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Domain(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Metrics of one epoch (epoch 0 is the untrained initialization).
#[derive(Debug, Clone, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Fidelity against the target, when a target was provided.
    pub fidelity: Option<f64>,
    /// Training-set negative log-likelihood, when exact log Z is tracked.
    pub nll: Option<f64>,
}

/// Full history of a training run plus the selected snapshot.
#[derive(Debug, Clone)]
pub struct TrainingTrace {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_parameters: RbmParameters,
    /// Whether exact log Z (and therefore NLL) was computed per epoch.
    pub log_z_available: bool,
}

impl TrainingTrace {
    /// Write the per-epoch history as CSV (`epoch,fidelity,nll`; absent
    /// metrics leave empty cells).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "epoch,fidelity,nll")?;
        for r in &self.records {
            let fid = r.fidelity.map_or(String::new(), |f| format!("{f:.16e}"));
            let nll = r.nll.map_or(String::new(), |x| format!("{x:.16e}"));
            writeln!(w, "{},{},{}", r.epoch, fid, nll)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fill `out` with Bernoulli draws at probabilities `p`, row-major order.
fn sample_bernoulli(p: &Array2<f64>, out: &mut Array2<f64>, rng: &mut impl Rng) {
    for (slot, &prob) in out.iter_mut().zip(p.iter()) {
        *slot = (rng.gen::<f64>() < prob) as u8 as f64;
    }
}

/// Hidden activation probabilities σ(b + vW) for a batch of visibles.
fn hidden_means(v: &Array2<f64>, rbm: &RbmParameters) -> Array2<f64> {
    let mut theta = v.dot(rbm.weights());
    theta += &rbm.hidden_bias().view().insert_axis(Axis(0));
    theta.mapv_inplace(logistic);
    theta
}

/// Visible activation probabilities σ(a + hWᵀ) for a batch of hiddens.
fn visible_means(h: &Array2<f64>, rbm: &RbmParameters) -> Array2<f64> {
    let mut field = h.dot(&rbm.weights().t());
    field += &rbm.visible_bias().view().insert_axis(Axis(0));
    field.mapv_inplace(logistic);
    field
}

/// Mean log p̃ over the rows of a sample matrix.
fn mean_log_unnormalized(v: &Array2<f64>, rbm: &RbmParameters) -> f64 {
    let mut theta = v.dot(rbm.weights());
    theta += &rbm.hidden_bias().view().insert_axis(Axis(0));
    theta.mapv_inplace(crate::math::softplus);
    let field = v.dot(rbm.visible_bias());
    (field.sum() + theta.sum()) / v.nrows() as f64
}

/// Fit an RBM with `n_hidden` units to the sample set by CD-k.
///
/// When `target` is given, fidelity against it is recorded every epoch and
/// — under [`CheckpointMetric::Fidelity`] — the snapshot with the highest
/// fidelity is returned. Otherwise (or under [`CheckpointMetric::Kl`]) the
/// snapshot minimizing the training-set NLL is returned; if neither metric
/// is computable the final epoch is returned. The trace always starts with
/// the epoch-0 record of the untouched initialization, so `epochs = 0`
/// returns the initial parameters.
pub fn train_tomography(
    data: &SampleSet,
    n_hidden: usize,
    config: &TrainingConfig,
    target: Option<&DickeState>,
) -> Result<(RbmParameters, TrainingTrace)> {
    config.validate()?;
    if n_hidden == 0 {
        return Err(Error::Domain("hidden unit count must be positive".into()));
    }
    let n = data.n_qubits();
    if let Some(t) = target {
        if t.n_qubits() != n {
            return Err(Error::Domain(format!(
                "target has {} qubits but samples have {n}",
                t.n_qubits()
            )));
        }
    }
    let sample_count = data.len();
    let mut v_data = Array2::zeros((sample_count, n));
    for (row, s) in data.samples().iter().enumerate() {
        for i in 0..n {
            v_data[[row, i]] = s.bit(i) as f64;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let w0 = Array2::from_shape_fn((n, n_hidden), |_| rng.gen_range(-INIT_SCALE..INIT_SCALE));
    let mut rbm = RbmParameters::new(w0, Array1::zeros(n), Array1::zeros(n_hidden))?;

    let track_log_z = n <= MAX_TRACKED_LOG_Z_QUBITS || target.is_some();
    let mut records = Vec::with_capacity(config.epochs + 1);
    let mut best: Option<(f64, usize, RbmParameters)> = None;

    let mut record_epoch = |epoch: usize,
                            rbm: &RbmParameters,
                            best: &mut Option<(f64, usize, RbmParameters)>|
     -> Result<()> {
        let log_z = if track_log_z {
            Some(rbm.partition_function()?)
        } else {
            None
        };
        let fidelity = match (target, log_z) {
            (Some(t), Some(z)) => Some(rbm.fidelity_with_log_z(t, z)?),
            _ => None,
        };
        let nll = log_z.map(|z| z - mean_log_unnormalized(&v_data, rbm));
        records.push(EpochRecord {
            epoch,
            fidelity,
            nll,
        });
        // Higher is better; NLL enters negated. Strict improvement keeps
        // the earliest epoch on ties.
        let score = match (config.checkpoint_metric, fidelity, nll) {
            (CheckpointMetric::Fidelity, Some(f), _) => Some(f),
            (CheckpointMetric::Fidelity, None, Some(l)) => Some(-l),
            (CheckpointMetric::Kl, _, Some(l)) => Some(-l),
            (CheckpointMetric::Kl, Some(f), None) => Some(f),
            _ => None,
        };
        let improved = match (&best, score) {
            (_, None) => true, // no metric: latest epoch wins
            (None, Some(_)) => true,
            (Some((b, _, _)), Some(s)) => s > *b,
        };
        if improved {
            *best = Some((score.unwrap_or(0.0), epoch, rbm.clone()));
        }
        Ok(())
    };

    record_epoch(0, &rbm, &mut best)?;

    let mut order: Vec<usize> = (0..sample_count).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch_indices in order.chunks(config.batch_size) {
            let v_pos = v_data.select(Axis(0), batch_indices);
            let batch_len = batch_indices.len() as f64;

            let h_pos = hidden_means(&v_pos, &rbm);

            let mut v_neg = v_pos.clone();
            let mut h_sample = Array2::zeros((batch_indices.len(), n_hidden));
            for _ in 0..config.cd_steps {
                let h_mean = hidden_means(&v_neg, &rbm);
                sample_bernoulli(&h_mean, &mut h_sample, &mut rng);
                let v_mean = visible_means(&h_sample, &rbm);
                sample_bernoulli(&v_mean, &mut v_neg, &mut rng);
            }
            let h_neg_mean = hidden_means(&v_neg, &rbm);
            let mut h_neg = Array2::zeros((batch_indices.len(), n_hidden));
            sample_bernoulli(&h_neg_mean, &mut h_neg, &mut rng);

            let scale = config.learning_rate / batch_len;
            let grad_w = (v_pos.t().dot(&h_pos) - v_neg.t().dot(&h_neg)) * scale;
            let grad_a = (v_pos.sum_axis(Axis(0)) - v_neg.sum_axis(Axis(0))) * scale;
            let grad_b = (h_pos.sum_axis(Axis(0)) - h_neg.sum_axis(Axis(0))) * scale;
            let (w, a, b) = rbm.parts_mut();
            *w += &grad_w;
            *a += &grad_a;
            *b += &grad_b;
        }
        if rbm
            .weights()
            .iter()
            .chain(rbm.visible_bias().iter())
            .chain(rbm.hidden_bias().iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::Training(format!(
                "parameters became non-finite at epoch {epoch} \
                 (learning_rate {}, cd_steps {}, batch_size {}); \
                 lower the learning rate or batch fewer samples",
                config.learning_rate, config.cd_steps, config.batch_size
            )));
        }
        record_epoch(epoch, &rbm, &mut best)?;
    }

    let (_, best_epoch, best_parameters) = best.expect("epoch 0 always recorded");
    let trace = TrainingTrace {
        records,
        best_epoch,
        best_parameters: best_parameters.clone(),
        log_z_available: track_log_z,
    };
    Ok((best_parameters, trace))
}

/// One row of the hidden-unit scaling study.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingStudyRow {
    pub n_hidden: usize,
    pub best_fidelity: f64,
    pub best_epoch: usize,
}

/// Train one RBM per hidden-unit count against a fixed Dicke target and
/// report the best fidelity reached.
///
/// All runs share one sample set and one seed, so rows differ only in M.
/// The learning rate is pinned to 0.01 regardless of `config` — the large
/// hidden layers this study sweeps destabilize at the default 0.1.
pub fn hidden_unit_scaling_study(
    n_qubits: usize,
    dicke_index: usize,
    m_list: &[usize],
    sample_count: usize,
    config: &TrainingConfig,
) -> Result<Vec<ScalingStudyRow>> {
    if m_list.is_empty() {
        return Err(Error::Domain("hidden-unit list must be non-empty".into()));
    }
    let target = DickeState::new(n_qubits, dicke_index)?;
    let data = target.sample_measurements(sample_count, config.seed)?;
    let study_config = TrainingConfig {
        learning_rate: 0.01,
        ..config.clone()
    };
    let mut rows = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let (_, trace) = train_tomography(&data, m, &study_config, Some(&target))?;
        let best_fidelity = trace.records[trace.best_epoch]
            .fidelity
            .expect("fidelity tracked whenever a target is given");
        rows.push(ScalingStudyRow {
            n_hidden: m,
            best_fidelity,
            best_epoch: trace.best_epoch,
        });
    }
    Ok(rows)
}

/// Write scaling-study rows as CSV (`n_hidden,best_fidelity,best_epoch`).
pub fn write_scaling_study_csv(rows: &[ScalingStudyRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "n_hidden,best_fidelity,best_epoch")?;
    for row in rows {
        writeln!(
            w,
            "{},{:.16e},{}",
            row.n_hidden, row.best_fidelity, row.best_epoch
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quick_config(epochs: usize, seed: u64) -> TrainingConfig {
        TrainingConfig {
            cd_steps: 2,
            learning_rate: 0.1,
            epochs,
            batch_size: 50,
            seed,
            checkpoint_metric: CheckpointMetric::Fidelity,
        }
    }

    #[test]
    fn defaults_match_documented_hyperparameters() {
        let c = TrainingConfig::default();
        assert_eq!(c.cd_steps, 10);
        assert_abs_diff_eq!(c.learning_rate, 0.1);
        assert_eq!(c.epochs, 2000);
        assert_eq!(c.batch_size, 100);
        assert_eq!(c.checkpoint_metric, CheckpointMetric::Fidelity);
    }

    #[test]
    fn config_validation_rejects_degenerate_values() {
        let mut c = TrainingConfig::default();
        c.cd_steps = 0;
        assert!(c.validate().is_err());
        c = TrainingConfig::default();
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
        c = TrainingConfig::default();
        c.batch_size = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let state = DickeState::new(4, 1).unwrap();
        let data = state.sample_measurements(200, 3).unwrap();
        let (rbm, trace) = train_tomography(&data, 4, &quick_config(0, 3), Some(&state)).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.best_epoch, 0);
        assert_eq!(rbm, trace.best_parameters);
        assert!(rbm.visible_bias().iter().all(|&x| x == 0.0));
        assert!(rbm.weights().iter().all(|&x| x.abs() <= INIT_SCALE));
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let state = DickeState::new(4, 2).unwrap();
        let data = state.sample_measurements(300, 8).unwrap();
        let (rbm1, trace1) =
            train_tomography(&data, 3, &quick_config(5, 12), Some(&state)).unwrap();
        let (rbm2, trace2) =
            train_tomography(&data, 3, &quick_config(5, 12), Some(&state)).unwrap();
        assert_eq!(rbm1, rbm2);
        assert_eq!(trace1.best_epoch, trace2.best_epoch);
        for (a, b) in trace1.records.iter().zip(&trace2.records) {
            assert_eq!(a.fidelity, b.fidelity);
            assert_eq!(a.nll, b.nll);
        }
        let (rbm3, _) = train_tomography(&data, 3, &quick_config(5, 13), Some(&state)).unwrap();
        assert_ne!(rbm1, rbm3);
    }

    #[test]
    fn best_epoch_attains_the_maximum_recorded_fidelity() {
        let state = DickeState::new(4, 1).unwrap();
        let data = state.sample_measurements(400, 21).unwrap();
        let (_, trace) = train_tomography(&data, 4, &quick_config(30, 21), Some(&state)).unwrap();
        let best = trace.records[trace.best_epoch].fidelity.unwrap();
        for r in &trace.records {
            assert!(r.fidelity.unwrap() <= best + 1e-15);
        }
        assert_abs_diff_eq!(
            trace.best_parameters.fidelity_exact(&state).unwrap(),
            best,
            epsilon = 1e-12
        );
    }

    #[test]
    fn short_run_already_improves_on_initialization() {
        let state = DickeState::new(4, 1).unwrap();
        let data = state.sample_measurements(500, 5).unwrap();
        let (_, trace) = train_tomography(&data, 4, &quick_config(60, 5), Some(&state)).unwrap();
        let initial = trace.records[0].fidelity.unwrap();
        let best = trace.records[trace.best_epoch].fidelity.unwrap();
        assert!(
            best > initial + 0.1,
            "best {best} should clearly beat initial {initial}"
        );
    }

    #[test]
    fn nll_checkpoint_works_without_target() {
        let state = DickeState::new(4, 2).unwrap();
        let data = state.sample_measurements(300, 2).unwrap();
        let mut config = quick_config(20, 2);
        config.checkpoint_metric = CheckpointMetric::Kl;
        let (_, trace) = train_tomography(&data, 3, &config, None).unwrap();
        assert!(trace.log_z_available);
        let best = trace.records[trace.best_epoch].nll.unwrap();
        for r in &trace.records {
            assert!(r.fidelity.is_none());
            assert!(r.nll.unwrap() >= best - 1e-15);
        }
    }

    #[test]
    fn dimension_mismatches_are_domain_errors() {
        let state = DickeState::new(4, 1).unwrap();
        let data = state.sample_measurements(100, 1).unwrap();
        let other = DickeState::new(5, 1).unwrap();
        assert!(train_tomography(&data, 4, &quick_config(1, 1), Some(&other)).is_err());
        assert!(train_tomography(&data, 0, &quick_config(1, 1), Some(&state)).is_err());
    }

    #[test]
    fn trace_csv_has_one_row_per_epoch() {
        let state = DickeState::new(4, 1).unwrap();
        let data = state.sample_measurements(100, 1).unwrap();
        let (_, trace) = train_tomography(&data, 2, &quick_config(4, 1), Some(&state)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        trace.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "epoch,fidelity,nll");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0,"));
    }

    #[test]
    fn scaling_study_reports_one_row_per_hidden_count() {
        let mut config = quick_config(8, 4);
        config.learning_rate = 123.0; // overridden to 0.01 by the study
        let rows = hidden_unit_scaling_study(4, 2, &[2, 4], 200, &config).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].n_hidden, 2);
        assert_eq!(rows[1].n_hidden, 4);
        for row in &rows {
            assert!((0.0..=1.0).contains(&row.best_fidelity));
        }
        assert!(hidden_unit_scaling_study(4, 2, &[], 100, &config).is_err());
        assert!(hidden_unit_scaling_study(4, 2, &[0], 100, &config).is_err());
    }
}
