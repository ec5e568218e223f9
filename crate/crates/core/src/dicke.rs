//! Exact Dicke states and projective-measurement sampling.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::math::{log_binomial, mix_seed};

/// Samples per RNG chunk when generating measurements in parallel. Each
/// chunk runs its own stream seeded with `mix_seed(seed, chunk_index)`, so
/// output is identical for any worker count.
const SAMPLE_CHUNK: usize = 1024;

/// The N-qubit Dicke state with index D: the equal-amplitude superposition
/// of every basis string of Hamming weight D.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DickeState {
    n_qubits: usize,
    dicke_index: usize,
}

impl DickeState {
    pub fn new(n_qubits: usize, dicke_index: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Domain("qubit count must be positive".into()));
        }
        if dicke_index > n_qubits {
            return Err(Error::Domain(format!(
                "Dicke index {dicke_index} exceeds qubit count {n_qubits}"
            )));
        }
        Ok(DickeState {
            n_qubits,
            dicke_index,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dicke_index(&self) -> usize {
        self.dicke_index
    }

    /// ln C(N, D), the log size of the state's support.
    pub fn log_support_size(&self) -> f64 {
        log_binomial(self.n_qubits as u64, self.dicke_index as u64)
            .expect("D <= N by construction")
    }

    /// Amplitude of a basis string: 1/sqrt(C(N, D)) on the weight-D support,
    /// zero elsewhere.
    pub fn amplitude(&self, v: &BitString) -> Result<f64> {
        if v.len() != self.n_qubits {
            return Err(Error::Domain(format!(
                "bitstring length {} does not match qubit count {}",
                v.len(),
                self.n_qubits
            )));
        }
        if v.weight() == self.dicke_index {
            Ok((-0.5 * self.log_support_size()).exp())
        } else {
            Ok(0.0)
        }
    }

    /// Draw `count` bitstrings i.i.d. from |Psi|^2, i.e. uniformly over the
    /// weight-D strings. Deterministic in `seed` regardless of worker count.
    pub fn sample_measurements(&self, count: usize, seed: u64) -> Result<SampleSet> {
        if count == 0 {
            return Err(Error::Domain("sample count must be positive".into()));
        }
        let n = self.n_qubits;
        let d = self.dicke_index;
        let chunks = count.div_ceil(SAMPLE_CHUNK);
        let samples: Vec<BitString> = (0..chunks)
            .into_par_iter()
            .flat_map_iter(|chunk| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, chunk as u64));
                let take = SAMPLE_CHUNK.min(count - chunk * SAMPLE_CHUNK);
                let mut out = Vec::with_capacity(take);
                let mut positions: Vec<usize> = (0..n).collect();
                for _ in 0..take {
                    // Partial Fisher-Yates: the first d entries become a
                    // uniformly random d-subset of positions.
                    for i in 0..d {
                        let j = rng.gen_range(i..n);
                        positions.swap(i, j);
                    }
                    let mut bits = BitString::zeros(n).expect("n >= 1");
                    for &p in &positions[..d] {
                        bits.set_bit(p, 1);
                    }
                    out.push(bits);
                }
                out
            })
            .collect();
        Ok(SampleSet {
            samples,
            seed,
            source: format!("dicke(N={n}, D={d})"),
        })
    }
}

/// A batch of measured bitstrings together with its generation record.
#[derive(Debug, Clone)]
pub struct SampleSet {
    samples: Vec<BitString>,
    seed: u64,
    source: String,
}

impl SampleSet {
    /// Wrap externally produced samples (for example read from a file).
    /// All strings must share one length.
    pub fn from_samples(samples: Vec<BitString>, seed: u64, source: String) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("sample set must be non-empty".into()));
        }
        let n = samples[0].len();
        if samples.iter().any(|s| s.len() != n) {
            return Err(Error::Domain("samples must all have the same length".into()));
        }
        Ok(SampleSet {
            samples,
            seed,
            source,
        })
    }

    pub fn samples(&self) -> &[BitString] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.samples[0].len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Write one measurement per line as space-separated 0/1 tokens.
    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for s in &self.samples {
            let line: Vec<String> = s.bits().iter().map(|b| b.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Read a sample file (one bitstring per line, space-separated 0/1 tokens).
pub fn read_sample_file(path: impl AsRef<Path>) -> Result<Vec<BitString>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut samples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bits = line
            .split_whitespace()
            .map(|tok| match tok {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(Error::Parse(format!(
                    "{}:{}: invalid token {tok:?}, expected 0 or 1",
                    path.display(),
                    lineno + 1
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        samples.push(BitString::new(bits).map_err(|e| {
            Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?);
    }
    if samples.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no samples found",
            path.display()
        )));
    }
    let n = samples[0].len();
    if let Some(bad) = samples.iter().position(|s| s.len() != n) {
        return Err(Error::Parse(format!(
            "{}:{}: inconsistent sample length",
            path.display(),
            bad + 1
        )));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::enumerate_basis;
    use approx::assert_abs_diff_eq;

    #[test]
    fn four_qubit_amplitudes_match_displayed_states() {
        let w = DickeState::new(4, 1).unwrap();
        assert_abs_diff_eq!(
            w.amplitude(&"0001".parse().unwrap()).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_eq!(w.amplitude(&"0011".parse().unwrap()).unwrap(), 0.0);

        let d2 = DickeState::new(4, 2).unwrap();
        assert_abs_diff_eq!(
            d2.amplitude(&"0101".parse().unwrap()).unwrap(),
            1.0 / 6f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn amplitude_rejects_length_mismatch() {
        let s = DickeState::new(4, 1).unwrap();
        assert!(s.amplitude(&"001".parse().unwrap()).is_err());
    }

    #[test]
    fn squared_amplitudes_sum_to_one_up_to_n12() {
        for n in 1..=12 {
            for d in 0..=n {
                let state = DickeState::new(n, d).unwrap();
                let total: f64 = enumerate_basis(n, None)
                    .unwrap()
                    .map(|v| {
                        let a = state.amplitude(&v).unwrap();
                        a * a
                    })
                    .sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn samples_live_on_the_weight_d_support() {
        let state = DickeState::new(8, 3).unwrap();
        let set = state.sample_measurements(10_000, 7).unwrap();
        assert_eq!(set.len(), 10_000);
        assert!(set.samples().iter().all(|s| s.weight() == 3));
    }

    #[test]
    fn sampling_is_reproducible() {
        let state = DickeState::new(6, 2).unwrap();
        let a = state.sample_measurements(3000, 99).unwrap();
        let b = state.sample_measurements(3000, 99).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = state.sample_measurements(3000, 100).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn w_state_sampling_is_uniform() {
        let state = DickeState::new(4, 1).unwrap();
        let set = state.sample_measurements(40_000, 5).unwrap();
        let mut counts = [0usize; 4];
        for s in set.samples() {
            let pos = s.bits().iter().position(|&b| b == 1).unwrap();
            counts[pos] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / 40_000.0;
            assert!((freq - 0.25).abs() < 0.01, "frequency {freq} off uniform");
        }
    }

    #[test]
    fn sample_file_round_trip() {
        let state = DickeState::new(5, 2).unwrap();
        let set = state.sample_measurements(200, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.txt");
        set.write_file(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("{}\n", {
            let s = set.samples()[0].to_string();
            s.chars().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
        })));
        let back = read_sample_file(&path).unwrap();
        assert_eq!(back, set.samples());
    }

    #[test]
    fn sample_count_zero_is_rejected() {
        let state = DickeState::new(4, 1).unwrap();
        assert!(state.sample_measurements(0, 1).is_err());
    }
}
