//! Dicke states as restricted Boltzmann machines.
//!
//! This crate models N-qubit Dicke states three ways — exactly, with a
//! tomography-trained RBM, and with a two-parameter compact RBM — and
//! provides the verification tooling (fidelities, connected correlation
//! functions, receptive-field analysis) used to compare them.

pub mod bits;
pub mod compact;
pub mod dicke;
pub mod error;
pub mod jsonfmt;
pub mod math;
pub mod pauli;
pub mod rbm;
pub mod rf;
pub mod statevec;
pub mod training;
pub mod ursell;

pub use bits::{enumerate_basis, BitString, MAX_FULL_ENUMERATION_QUBITS};
pub use compact::{
    fidelity_path, optimal_weights, phase_diagram, phase_diagram_stream_csv,
    write_phase_diagram_header, AxisSpec, CompactRbm, PhaseDiagramGrid, SectorPoint,
};
pub use dicke::{read_sample_file, DickeState, SampleSet};
pub use error::{Error, Result};
pub use pauli::{pauli_expectation, PauliString, Projection};
pub use rbm::{read_weights_file, RbmMetadata, RbmParameters};
pub use rf::{rf_score, rf_template_fit, RfReport, RfTemplateFit};
pub use statevec::{StateVector, MAX_STATE_VECTOR_QUBITS};
pub use training::{
    hidden_unit_scaling_study, train_tomography, CheckpointMetric, TrainingConfig, TrainingTrace,
};
pub use ursell::{correlation_histogram, ursell, CorrelationReport};
