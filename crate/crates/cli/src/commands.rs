//! The eight subcommands: argument structs, config merging, and runners.
//!
//! Every `*Args` struct doubles as the JSON config-file schema (same
//! snake_case keys, unknown keys rejected). `merged` applies flag-over-file
//! precedence; the runner then fills built-in defaults and rejects missing
//! required values.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ArgAction;
use dicke_rbm_core::compact::SECTOR_THRESHOLD;
use dicke_rbm_core::jsonfmt::to_writer_sci;
use dicke_rbm_core::training::write_scaling_study_csv;
use dicke_rbm_core::{
    correlation_histogram, fidelity_path, hidden_unit_scaling_study, phase_diagram,
    phase_diagram_stream_csv, read_sample_file, read_weights_file, rf_score, rf_template_fit,
    write_phase_diagram_header, AxisSpec, CheckpointMetric, CompactRbm, DickeState, Error,
    RbmMetadata, Result, SampleSet, SectorPoint, TrainingConfig,
};
use serde::{Deserialize, Serialize};

use crate::config;

const DEFAULT_SAMPLE_COUNT: usize = 10_000;
const DEFAULT_GRID_COUNT: usize = 200;
const DEFAULT_W_MIN_RANGE: (f64, f64) = (-10.0, -0.02);
const DEFAULT_W_MAX_START: f64 = 0.1;
const DEFAULT_PATH_SAMPLES: usize = 101;
/// Global score above which a weight matrix counts as receptive-field-like
/// in the stdout verdict (the JSON report always carries the raw score).
const RF_VERDICT_THRESHOLD: f64 = 0.5;

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Checkpoint metric as a flag/config value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Fidelity,
    Kl,
}

impl From<MetricArg> for CheckpointMetric {
    fn from(m: MetricArg) -> CheckpointMetric {
        match m {
            MetricArg::Fidelity => CheckpointMetric::Fidelity,
            MetricArg::Kl => CheckpointMetric::Kl,
        }
    }
}

// ---------------------------------------------------------------- sample

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleArgs {
    /// JSON config file with the same keys as the flags below.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Number of qubits.
    #[arg(long)]
    n: Option<usize>,
    /// Dicke index (number of excitations).
    #[arg(long)]
    d: Option<usize>,
    /// Number of measurement samples [default: 10000].
    #[arg(long)]
    count: Option<usize>,
    /// RNG seed; generated and recorded when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Output sample file (one space-separated bitstring per line).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl SampleArgs {
    fn merged(self, file: Self) -> Self {
        SampleArgs {
            config: None,
            n: self.n.or(file.n),
            d: self.d.or(file.d),
            count: self.count.or(file.count),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
        }
    }
}

#[derive(Serialize)]
struct SampleParams {
    n: usize,
    d: usize,
    count: usize,
    seed: u64,
    out: String,
}

pub fn run_sample(args: SampleArgs) -> Result<()> {
    let started = Instant::now();
    let file: SampleArgs = config::load(args.config.as_ref())?;
    let args = args.merged(file);

    let n = config::require(args.n, "n")?;
    let d = config::require(args.d, "d")?;
    let count = args.count.unwrap_or(DEFAULT_SAMPLE_COUNT);
    let seed = config::resolve_seed(args.seed);
    let out = config::require(args.out, "out")?;

    let state = DickeState::new(n, d)?;
    let samples = state.sample_measurements(count, seed)?;
    samples.write_file(&out)?;

    let params = SampleParams {
        n,
        d,
        count,
        seed,
        out: path_str(&out),
    };
    config::write_metadata(&out, "sample", Some(seed), started, &params)?;
    println!(
        "wrote {count} samples of the (N={n}, D={d}) Dicke state to {} (seed {seed})",
        out.display()
    );
    Ok(())
}

// ----------------------------------------------------------------- train

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    /// JSON config file with the same keys as the flags below.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Input sample file.
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Hidden-unit count [default: one per visible unit].
    #[arg(long)]
    hidden: Option<usize>,
    /// Gibbs steps per contrastive-divergence update [default: 10].
    #[arg(long)]
    cd_steps: Option<usize>,
    /// Gradient step size [default: 0.1].
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Training epochs [default: 2000].
    #[arg(long)]
    epochs: Option<usize>,
    /// Minibatch size [default: 100].
    #[arg(long)]
    batch_size: Option<usize>,
    /// RNG seed; generated and recorded when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Which per-epoch metric selects the stored snapshot
    /// [default: fidelity].
    #[arg(long, value_enum)]
    checkpoint: Option<MetricArg>,
    /// Qubit count of a Dicke target; with --target-d, enables the
    /// per-epoch fidelity trace.
    #[arg(long)]
    target_n: Option<usize>,
    /// Dicke index of the target state.
    #[arg(long)]
    target_d: Option<usize>,
    /// Output weights JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output per-epoch trace CSV [default: <out>.trace.csv].
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

impl TrainArgs {
    fn merged(self, file: Self) -> Self {
        TrainArgs {
            config: None,
            data: self.data.or(file.data),
            hidden: self.hidden.or(file.hidden),
            cd_steps: self.cd_steps.or(file.cd_steps),
            learning_rate: self.learning_rate.or(file.learning_rate),
            epochs: self.epochs.or(file.epochs),
            batch_size: self.batch_size.or(file.batch_size),
            seed: self.seed.or(file.seed),
            checkpoint: self.checkpoint.or(file.checkpoint),
            target_n: self.target_n.or(file.target_n),
            target_d: self.target_d.or(file.target_d),
            out: self.out.or(file.out),
            trace: self.trace.or(file.trace),
        }
    }
}

#[derive(Serialize)]
struct TrainParams {
    data: String,
    hidden: usize,
    cd_steps: usize,
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    checkpoint: MetricArg,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_d: Option<usize>,
    out: String,
    trace: String,
}

pub fn run_train(args: TrainArgs) -> Result<()> {
    let started = Instant::now();
    let file: TrainArgs = config::load(args.config.as_ref())?;
    let args = args.merged(file);

    let data_path = config::require(args.data, "data")?;
    let out = config::require(args.out, "out")?;
    let trace_path = args
        .trace
        .unwrap_or_else(|| out.with_extension("trace.csv"));
    let seed = config::resolve_seed(args.seed);
    let metric = args.checkpoint.unwrap_or(MetricArg::Fidelity);

    let target = match (args.target_n, args.target_d) {
        (Some(n), Some(d)) => Some(DickeState::new(n, d)?),
        (None, None) => None,
        _ => {
            return Err(Error::Domain(
                "--target-n and --target-d must be given together".into(),
            ))
        }
    };

    let bits = read_sample_file(&data_path)?;
    let data = SampleSet::from_samples(bits, 0, path_str(&data_path))?;
    let hidden = args.hidden.unwrap_or_else(|| data.n_qubits());

    let defaults = TrainingConfig::default();
    let train_config = TrainingConfig {
        cd_steps: args.cd_steps.unwrap_or(defaults.cd_steps),
        learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
        epochs: args.epochs.unwrap_or(defaults.epochs),
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        seed,
        checkpoint_metric: metric.into(),
    };

    let (best, trace) = dicke_rbm_core::train_tomography(
        &data,
        hidden,
        &train_config,
        target.as_ref(),
    )?;

    let best_record = &trace.records[trace.best_epoch];
    let weights_meta = RbmMetadata {
        seed: Some(seed),
        config: Some(
            serde_json::to_value(&train_config)
                .map_err(|e| Error::Parse(format!("training config: {e}")))?,
        ),
        best_epoch: Some(trace.best_epoch),
        fidelity: best_record.fidelity,
    };
    best.write_weights_file(&out, Some(&weights_meta))?;
    trace.write_csv(&trace_path)?;

    let params = TrainParams {
        data: path_str(&data_path),
        hidden,
        cd_steps: train_config.cd_steps,
        learning_rate: train_config.learning_rate,
        epochs: train_config.epochs,
        batch_size: train_config.batch_size,
        seed,
        checkpoint: metric,
        target_n: args.target_n,
        target_d: args.target_d,
        out: path_str(&out),
        trace: path_str(&trace_path),
    };
    config::write_metadata(&out, "train", Some(seed), started, &params)?;

    match (best_record.fidelity, best_record.nll) {
        (Some(f), _) => println!(
            "best epoch {}: fidelity {f:.6} (seed {seed})",
            trace.best_epoch
        ),
        (None, Some(nll)) => println!(
            "best epoch {}: training NLL {nll:.6} (seed {seed})",
            trace.best_epoch
        ),
        (None, None) => println!("kept the final epoch {} (seed {seed})", trace.best_epoch),
    }
    println!("weights -> {}", out.display());
    println!("trace   -> {}", trace_path.display());
    Ok(())
}

// -------------------------------------------------------------- fidelity

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelityArgs {
    /// JSON config file with the same keys as the flags below.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Qubit count (inferred from --weights when omitted).
    #[arg(long)]
    n: Option<usize>,
    /// Dicke index; required with --weights, optional for the compact
    /// model (omitting it reports every sector).
    #[arg(long)]
    d: Option<usize>,
    /// Stored weights JSON to evaluate exactly.
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// Compact-model off-diagonal coupling (with --w-max).
    #[arg(long, allow_negative_numbers = true)]
    w_min: Option<f64>,
    /// Compact-model diagonal coupling (with --w-min).
    #[arg(long, allow_negative_numbers = true)]
    w_max: Option<f64>,
    /// Winning-sector threshold for the summary [default: 0.5].
    #[arg(long)]
    threshold: Option<f64>,
    /// Write the compact model as an explicit weights JSON (circulant
    /// N x N matrix), e.g. to feed rf-report.
    #[arg(long, value_name = "FILE")]
    export_weights: Option<PathBuf>,
    /// Optional output JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl FidelityArgs {
    fn merged(self, file: Self) -> Self {
        FidelityArgs {
            config: None,
            n: self.n.or(file.n),
            d: self.d.or(file.d),
            weights: self.weights.or(file.weights),
            w_min: self.w_min.or(file.w_min),
            w_max: self.w_max.or(file.w_max),
            threshold: self.threshold.or(file.threshold),
            export_weights: self.export_weights.or(file.export_weights),
            out: self.out.or(file.out),
        }
    }
}

#[derive(Serialize)]
struct FidelityParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_max: Option<f64>,
    threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    export_weights: Option<String>,
    out: String,
}

#[derive(Serialize)]
struct FidelityArtifact {
    n_qubits: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    dicke_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    /// Sector fidelities indexed by D (compact model without --d).
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelities: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best: Option<SectorPoint>,
}

pub fn run_fidelity(args: FidelityArgs) -> Result<()> {
    let started = Instant::now();
    let file: FidelityArgs = config::load(args.config.as_ref())?;
    let args = args.merged(file);
    let threshold = args.threshold.unwrap_or(SECTOR_THRESHOLD);

    let artifact = match (&args.weights, args.w_min, args.w_max) {
        (Some(weights_path), None, None) => {
            if args.export_weights.is_some() {
                return Err(Error::Domain(
                    "--export-weights only applies to the compact model".into(),
                ));
            }
            let (rbm, _) = read_weights_file(weights_path)?;
            let n = rbm.n_visible();
            if let Some(flag_n) = args.n {
                if flag_n != n {
                    return Err(Error::Domain(format!(
                        "--n {flag_n} does not match the {n} visible units in {}",
                        weights_path.display()
                    )));
                }
            }
            let d = config::require(args.d, "d")?;
            let fidelity = rbm.fidelity_exact(&DickeState::new(n, d)?)?;
            println!("fidelity against the (N={n}, D={d}) Dicke state: {fidelity:.6}");
            FidelityArtifact {
                n_qubits: n,
                dicke_index: Some(d),
                weights: Some(path_str(weights_path)),
                w_min: None,
                w_max: None,
                fidelity: Some(fidelity),
                fidelities: None,
                best: None,
            }
        }
        (None, Some(w_min), Some(w_max)) => {
            let n = config::require(args.n, "n")?;
            let compact = CompactRbm::new(n, w_min, w_max)?;
            if let Some(export) = &args.export_weights {
                compact.export_explicit()?.write_weights_file(export, None)?;
                println!("explicit weights -> {}", export.display());
            }
            match args.d {
                Some(d) => {
                    let fidelity = compact.fidelity_analytic(d)?;
                    println!(
                        "compact model (w_min {w_min}, w_max {w_max}): F_{d} = {fidelity:.6}"
                    );
                    FidelityArtifact {
                        n_qubits: n,
                        dicke_index: Some(d),
                        weights: None,
                        w_min: Some(w_min),
                        w_max: Some(w_max),
                        fidelity: Some(fidelity),
                        fidelities: None,
                        best: None,
                    }
                }
                None => {
                    let fidelities = compact.fidelities_all();
                    let best = compact.best_sector(threshold);
                    match best.best_d {
                        Some(d) => println!(
                            "best sector D = {d} with fidelity {:.6}",
                            best.best_fidelity
                        ),
                        None => println!(
                            "no sector above threshold {threshold} (best fidelity {:.6})",
                            best.best_fidelity
                        ),
                    }
                    FidelityArtifact {
                        n_qubits: n,
                        dicke_index: None,
                        weights: None,
                        w_min: Some(w_min),
                        w_max: Some(w_max),
                        fidelity: None,
                        fidelities: Some(fidelities),
                        best: Some(best),
                    }
                }
            }
        }
        _ => {
            return Err(Error::Domain(
                "pass either --weights FILE or both --w-min and --w-max".into(),
            ))
        }
    };

    if let Some(out) = &args.out {
        let w = std::io::BufWriter::new(std::fs::File::create(out)?);
        to_writer_sci(w, &artifact)?;
        let params = FidelityParams {
            n: Some(artifact.n_qubits),
            d: args.d,
            weights: args.weights.as_deref().map(path_str),
            w_min: args.w_min,
            w_max: args.w_max,
            threshold,
            export_weights: args.export_weights.as_deref().map(path_str),
            out: path_str(out),
        };
        config::write_metadata(out, "fidelity", None, started, &params)?;
        println!("report -> {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------- ursell

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UrsellArgs {
    /// JSON config file with the same keys as the flags below.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Number of qubits.
    #[arg(long)]
    n: Option<usize>,
    /// Dicke index of the analyzed state.
    #[arg(long)]
    d: Option<usize>,
    /// Correlation order (1–4).
    #[arg(long)]
    order: Option<usize>,
    /// Analyze the D=0 product state instead; connected correlations of
    /// order ≥ 2 must vanish, and the run reports the largest deviation.
    #[arg(long, action = ArgAction::SetTrue)]
    product_check: Option<bool>,
    /// Output CSV (order,label,sites,value).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Optional JSON report with merged correlation levels.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

impl UrsellArgs {
    fn merged(self, file: Self) -> Self {
        UrsellArgs {
            config: None,
            n: self.n.or(file.n),
            d: self.d.or(file.d),
            order: self.order.or(file.order),
            product_check: self.product_check.or(file.product_check),
            out: self.out.or(file.out),
            json: self.json.or(file.json),
        }
    }
}

#[derive(Serialize)]
struct UrsellParams {
    n: usize,
    d: usize,
    order: usize,
    product_check: bool,
    out: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    json: Option<String>,
}

pub fn run_ursell(args: UrsellArgs) -> Result<()> {
    let started = Instant::now();
    let file: UrsellArgs = config::load(args.config.as_ref())?;
    let args = args.merged(file);

    let n = config::require(args.n, "n")?;
    let order = config::require(args.order, "order")?;
    let product_check = args.product_check.unwrap_or(false);
    let d = if product_check {
        if order < 2 {
            return Err(Error::Domain(
                "the product-state check needs order >= 2 (first-order moments do not vanish)"
                    .into(),
            ));
        }
        0
    } else {
        config::require(args.d, "d")?
    };
    let out = config::require(args.out, "out")?;

    let state = DickeState::new(n, d)?;
    let report = correlation_histogram(&state, order)?;
    report.write_csv(&out)?;
    if let Some(json) = &args.json {
        report.write_json(json)?;
    }

    let params = UrsellParams {
        n,
        d,
        order,
        product_check,
        out: path_str(&out),
        json: args.json.as_deref().map(path_str),
    };
    config::write_metadata(&out, "ursell", None, started, &params)?;

    println!(
        "order-{order} connected correlations of the (N={n}, D={d}) state: \
         {} nonzero levels, {} vanishing labels, max |value| = {:.6}",
        report.levels.len(),
        report.zero_labels.len(),
        report.max_abs_value()
    );
    for level in report.levels.iter().take(5) {
        println!(
            "  {:+.6e}  x{}  ({})",
            level.value,
            level.multiplicity,
            level.labels.join(" ")
        );
    }
    if product_check {
        println!(
            "product-state check: largest connected correlation {:.3e} (expected 0)",
            report.max_abs_value()
        );
    }
    println!("histogram -> {}", out.display());
    Ok(())
}

// --------------------------------------------------------- phase-diagram

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramArgs {
    /// JSON config file with the same keys as the flags below.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Number of qubits.
    #[arg(long)]
    n: Option<usize>,
    /// First w_min value [default: -10].
    #[arg(long, allow_negative_numbers = true)]
    w_min_start: Option<f64>,
    /// Last w_min value [default: -0.02].
    #[arg(long, allow_negative_numbers = true)]
    w_min_stop: Option<f64>,
    /// Grid points along w_min [default: 200].
    #[arg(long)]
    w_min_count: Option<usize>,
    /// First w_max value [default: 0.1].
    #[arg(long, allow_negative_numbers = true)]
    w_max_start: Option<f64>,
    /// Last w_max value [default: 10·N].
    #[arg(long, allow_negative_numbers = true)]
    w_max_stop: Option<f64>,
    /// Grid points along w_max [default: 200].
    #[arg(long)]
    w_max_count: Option<usize>,
    /// Fidelity a sector must exceed to win a point [default: 0.5].
    #[arg(long)]
    threshold: Option<f64>,
    /// Output CSV (w_min,w_max,best_D,best_F; -1 when no sector wins).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Axis/layout header JSON [default: <out>.header.json].
    #[arg(long, value_name = "FILE")]
    header: Option<PathBuf>,
    /// Optional color pixmap (P3; sector hue ramp, white = no sector).
    #[arg(long, value_name = "FILE")]
    ppm: Option<PathBuf>,
}

impl PhaseDiagramArgs {
    fn merged(self, file: Self) -> Self {
        PhaseDiagramArgs {
            config: None,
            n: self.n.or(file.n),
            w_min_start: self.w_min_start.or(file.w_min_start),
            w_min_stop: self.w_min_stop.or(file.w_min_stop),
            w_min_count: self.w_min_count.or(file.w_min_count),
            w_max_start: self.w_max_start.or(file.w_max_start),
            w_max_stop: self.w_max_stop.or(file.w_max_stop),
            w_max_count: self.w_max_count.or(file.w_max_count),
            threshold: self.threshold.or(file.threshold),
            out: self.out.or(file.out),
            header: self.header.or(file.header),
            ppm: self.ppm.or(file.ppm),
        }
    }
}

#[derive(Serialize)]
struct PhaseDiagramParams {
    n: usize,
    w_min_start: f64,
    w_min_stop: f64,
    w_min_count: usize,
    w_max_start: f64,
    w_max_stop: f64,
    w_max_count: usize,
    threshold: f64,
    out: String,
    header: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    ppm: Option<String>,
}

pub fn run_phase_diagram(args: PhaseDiagramArgs) -> Result<()> {
    let started = Instant::now();
    let file: PhaseDiagramArgs = config::load(args.config.as_ref())?;
    let args = args.merged(file);

    let n = config::require(args.n, "n")?;
    let out = config::require(args.out, "out")?;
    let header = args
        .header
        .unwrap_or_else(|| out.with_extension("header.json"));
    let threshold = args.threshold.unwrap_or(SECTOR_THRESHOLD);

    let w_min_axis = AxisSpec::new(
        args.w_min_start.unwrap_or(DEFAULT_W_MIN_RANGE.0),
        args.w_min_stop.unwrap_or(DEFAULT_W_MIN_RANGE.1),
        args.w_min_count.unwrap_or(DEFAULT_GRID_COUNT),
    )?;
    let w_max_axis = AxisSpec::new(
        args.w_max_start.unwrap_or(DEFAULT_W_MAX_START),
        args.w_max_stop.unwrap_or(10.0 * n as f64),
        args.w_max_count.unwrap_or(DEFAULT_GRID_COUNT),
    )?;

    // A pixmap needs the whole grid; plain CSV runs stream row by row.
    if let Some(ppm) = &args.ppm {
        let grid = phase_diagram(n, &w_min_axis, &w_max_axis, threshold)?;
        grid.write_csv(&out)?;
        grid.write_json_header(&header)?;
        grid.write_ppm(ppm)?;
    } else {
        phase_diagram_stream_csv(n, &w_min_axis, &w_max_axis, threshold, &out)?;
        write_phase_diagram_header(n, threshold, &w_min_axis, &w_max_axis, &header)?;
    }

    let params = PhaseDiagramParams {
        n,
        w_min_start: w_min_axis.min,
        w_min_stop: w_min_axis.max,
        w_min_count: w_min_axis.count,
        w_max_start: w_max_axis.min,
        w_max_stop: w_max_axis.max,
        w_max_count: w_max_axis.count,
        threshold,
        out: path_str(&out),
        header: path_str(&header),
        ppm: args.ppm.as_deref().map(path_str),
    };
    config::write_metadata(&out, "phase-diagram", None, started, &params)?;

    println!(
        "classified a {}x{} grid for N={n} (threshold {threshold})",
        w_min_axis.count, w_max_axis.count
    );
    println!("grid   -> {}", out.display());
    println!("header -> {}", header.display());
    if let Some(ppm) = &args.ppm {
        println!("pixmap -> {}", ppm.display());
    }
    Ok(())
}

// ------------------------------------------------------------------ path

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathArgs {
    /// JSON config file with the same keys as the flags below.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Number of qubits.
    #[arg(long)]
    n: Option<usize>,
    /// w_min at the start of the path.
    #[arg(long, allow_negative_numbers = true)]
    start_w_min: Option<f64>,
    /// w_max at the start of the path.
    #[arg(long, allow_negative_numbers = true)]
    start_w_max: Option<f64>,
    /// w_min at the end of the path.
    #[arg(long, allow_negative_numbers = true)]
    end_w_min: Option<f64>,
    /// w_max at the end of the path.
    #[arg(long, allow_negative_numbers = true)]
    end_w_max: Option<f64>,
    /// Number of evenly spaced points, endpoints included [default: 101].
    #[arg(long)]
    samples: Option<usize>,
    /// Dicke indices to trace, comma separated [default: all 0..=N].
    #[arg(long, value_delimiter = ',')]
    d_list: Option<Vec<usize>>,
    /// Output CSV (t,w_min,w_max,F<d>...).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl PathArgs {
    fn merged(self, file: Self) -> Self {
        PathArgs {
            config: None,
            n: self.n.or(file.n),
            start_w_min: self.start_w_min.or(file.start_w_min),
            start_w_max: self.start_w_max.or(file.start_w_max),
            end_w_min: self.end_w_min.or(file.end_w_min),
            end_w_max: self.end_w_max.or(file.end_w_max),
            samples: self.samples.or(file.samples),
            d_list: self.d_list.or(file.d_list),
            out: self.out.or(file.out),
        }
    }
}

#[derive(Serialize)]
struct PathParams {
    n: usize,
    start_w_min: f64,
    start_w_max: f64,
    end_w_min: f64,
    end_w_max: f64,
    samples: usize,
    d_list: Vec<usize>,
    out: String,
}

pub fn run_path(args: PathArgs) -> Result<()> {
    let started = Instant::now();
    let file: PathArgs = config::load(args.config.as_ref())?;
    let args = args.merged(file);

    let n = config::require(args.n, "n")?;
    let start = (
        config::require(args.start_w_min, "start_w_min")?,
        config::require(args.start_w_max, "start_w_max")?,
    );
    let end = (
        config::require(args.end_w_min, "end_w_min")?,
        config::require(args.end_w_max, "end_w_max")?,
    );
    let samples = args.samples.unwrap_or(DEFAULT_PATH_SAMPLES);
    let d_list = args.d_list.unwrap_or_else(|| (0..=n).collect());
    let out = config::require(args.out, "out")?;

    let rows = fidelity_path(n, start, end, samples, &d_list)?;
    dicke_rbm_core::compact::write_path_csv(&rows, &d_list, &out)?;

    let params = PathParams {
        n,
        start_w_min: start.0,
        start_w_max: start.1,
        end_w_min: end.0,
        end_w_max: end.1,
        samples,
        d_list,
        out: path_str(&out),
    };
    config::write_metadata(&out, "path", None, started, &params)?;

    println!(
        "traced {samples} points from ({}, {}) to ({}, {}) for N={n}",
        start.0, start.1, end.0, end.1
    );
    println!("path -> {}", out.display());
    Ok(())
}

// ------------------------------------------------------------- rf-report

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfReportArgs {
    /// JSON config file with the same keys as the flags below.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Stored weights JSON to analyze.
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// Output report JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Optional per-hidden-unit CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Optional two-parameter template fit JSON (square matrices only).
    #[arg(long, value_name = "FILE")]
    template_fit: Option<PathBuf>,
    /// Optional weight-matrix CSV heatmap.
    #[arg(long, value_name = "FILE")]
    heatmap_csv: Option<PathBuf>,
    /// Optional weight-matrix graymap (P2).
    #[arg(long, value_name = "FILE")]
    heatmap_pgm: Option<PathBuf>,
}

impl RfReportArgs {
    fn merged(self, file: Self) -> Self {
        RfReportArgs {
            config: None,
            weights: self.weights.or(file.weights),
            out: self.out.or(file.out),
            csv: self.csv.or(file.csv),
            template_fit: self.template_fit.or(file.template_fit),
            heatmap_csv: self.heatmap_csv.or(file.heatmap_csv),
            heatmap_pgm: self.heatmap_pgm.or(file.heatmap_pgm),
        }
    }
}

#[derive(Serialize)]
struct RfReportParams {
    weights: String,
    out: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    template_fit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heatmap_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heatmap_pgm: Option<String>,
}

pub fn run_rf_report(args: RfReportArgs) -> Result<()> {
    let started = Instant::now();
    let file: RfReportArgs = config::load(args.config.as_ref())?;
    let args = args.merged(file);

    let weights_path = config::require(args.weights, "weights")?;
    let out = config::require(args.out, "out")?;

    let (rbm, _) = read_weights_file(&weights_path)?;
    let report = rf_score(rbm.weights())?;
    report.write_json(&out)?;
    if let Some(csv) = &args.csv {
        report.write_csv(csv)?;
    }
    if let Some(fit_path) = &args.template_fit {
        let fit = rf_template_fit(rbm.weights())?;
        let w = std::io::BufWriter::new(std::fs::File::create(fit_path)?);
        to_writer_sci(w, &fit)?;
        println!(
            "template fit: w_max ~ {:.6}, w_min ~ {:.6}, residual {:.6}",
            fit.w_max_est, fit.w_min_est, fit.residual
        );
    }
    if let Some(heatmap) = &args.heatmap_csv {
        rbm.write_heatmap_csv(heatmap)?;
    }
    if let Some(pgm) = &args.heatmap_pgm {
        rbm.write_heatmap_pgm(pgm)?;
    }

    let params = RfReportParams {
        weights: path_str(&weights_path),
        out: path_str(&out),
        csv: args.csv.as_deref().map(path_str),
        template_fit: args.template_fit.as_deref().map(path_str),
        heatmap_csv: args.heatmap_csv.as_deref().map(path_str),
        heatmap_pgm: args.heatmap_pgm.as_deref().map(path_str),
    };
    config::write_metadata(&out, "rf-report", None, started, &params)?;

    let verdict = if report.global_score >= RF_VERDICT_THRESHOLD {
        "global receptive fields present"
    } else {
        "global receptive fields absent"
    };
    println!(
        "global score {:.6} over {} hidden units ({} collisions): {verdict}",
        report.global_score, report.n_hidden, report.collisions
    );
    println!("report -> {}", out.display());
    Ok(())
}

// --------------------------------------------------------- scaling-study

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingStudyArgs {
    /// JSON config file with the same keys as the flags below.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Number of qubits.
    #[arg(long)]
    n: Option<usize>,
    /// Dicke index of the target state.
    #[arg(long)]
    d: Option<usize>,
    /// Hidden-unit counts to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
    /// Training samples drawn once and shared by all runs
    /// [default: 10000].
    #[arg(long)]
    samples: Option<usize>,
    /// Training epochs per run [default: 2000].
    #[arg(long)]
    epochs: Option<usize>,
    /// Gibbs steps per update [default: 10].
    #[arg(long)]
    cd_steps: Option<usize>,
    /// Minibatch size [default: 100].
    #[arg(long)]
    batch_size: Option<usize>,
    /// RNG seed; generated and recorded when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (n_hidden,best_fidelity,best_epoch).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl ScalingStudyArgs {
    fn merged(self, file: Self) -> Self {
        ScalingStudyArgs {
            config: None,
            n: self.n.or(file.n),
            d: self.d.or(file.d),
            m_list: self.m_list.or(file.m_list),
            samples: self.samples.or(file.samples),
            epochs: self.epochs.or(file.epochs),
            cd_steps: self.cd_steps.or(file.cd_steps),
            batch_size: self.batch_size.or(file.batch_size),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
        }
    }
}

#[derive(Serialize)]
struct ScalingStudyParams {
    n: usize,
    d: usize,
    m_list: Vec<usize>,
    samples: usize,
    epochs: usize,
    cd_steps: usize,
    batch_size: usize,
    seed: u64,
    out: String,
}

pub fn run_scaling_study(args: ScalingStudyArgs) -> Result<()> {
    let started = Instant::now();
    let file: ScalingStudyArgs = config::load(args.config.as_ref())?;
    let args = args.merged(file);

    let n = config::require(args.n, "n")?;
    let d = config::require(args.d, "d")?;
    let m_list = config::require(args.m_list, "m_list")?;
    let samples = args.samples.unwrap_or(DEFAULT_SAMPLE_COUNT);
    let seed = config::resolve_seed(args.seed);
    let out = config::require(args.out, "out")?;

    let defaults = TrainingConfig::default();
    let study_config = TrainingConfig {
        cd_steps: args.cd_steps.unwrap_or(defaults.cd_steps),
        epochs: args.epochs.unwrap_or(defaults.epochs),
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        seed,
        ..defaults
    };

    let rows = hidden_unit_scaling_study(n, d, &m_list, samples, &study_config)?;
    write_scaling_study_csv(&rows, &out)?;

    let params = ScalingStudyParams {
        n,
        d,
        m_list,
        samples,
        epochs: study_config.epochs,
        cd_steps: study_config.cd_steps,
        batch_size: study_config.batch_size,
        seed,
        out: path_str(&out),
    };
    config::write_metadata(&out, "scaling-study", Some(seed), started, &params)?;

    for row in &rows {
        println!(
            "M = {:>4}: best fidelity {:.6} at epoch {}",
            row.n_hidden, row.best_fidelity, row.best_epoch
        );
    }
    println!("study -> {}", out.display());
    Ok(())
}
