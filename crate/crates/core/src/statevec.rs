//! Dense real state vectors for exact expectation values at small N.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::{weight_masks, BitString};
use crate::dicke::DickeState;
use crate::error::{Error, Result};

/// Largest qubit count for which dense 2^N state vectors are constructed.
pub const MAX_STATE_VECTOR_QUBITS: usize = 20;

/// Tolerance on the squared norm of a state vector.
const NORM_TOLERANCE: f64 = 1e-10;

/// A normalized N-qubit pure state with real amplitudes, indexed by basis
/// mask (v_1 is the most significant bit, matching [`BitString`]).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<f64>,
}

impl StateVector {
    /// Wrap a dense amplitude vector. The length must be 2^n for some
    /// n ≤ 20 and the squared norm must be 1 within 1e-10.
    pub fn new(amplitudes: Vec<f64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Domain(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_STATE_VECTOR_QUBITS {
            return Err(Error::Capacity(format!(
                "state vectors support up to {MAX_STATE_VECTOR_QUBITS} qubits, got {n_qubits}"
            )));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a * a).sum();
        if (norm2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Domain(format!(
                "squared norm {norm2} deviates from 1 by more than {NORM_TOLERANCE}"
            )));
        }
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    /// The exact Dicke state as a dense vector: 1/sqrt(C(N, D)) on every
    /// weight-D basis mask.
    pub fn from_dicke(state: &DickeState) -> Result<Self> {
        let n = state.n_qubits();
        if n > MAX_STATE_VECTOR_QUBITS {
            return Err(Error::Capacity(format!(
                "state vectors support up to {MAX_STATE_VECTOR_QUBITS} qubits, got {n}"
            )));
        }
        let support = (-0.5 * state.log_support_size()).exp();
        let mut amplitudes = vec![0.0; 1 << n];
        for mask in weight_masks(n, state.dicke_index())? {
            amplitudes[mask as usize] = support;
        }
        // ln_gamma rounding leaves the norm off by ~1e-14; renormalize so
        // downstream expectation values are exact to machine precision.
        let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in &mut amplitudes {
            *a /= norm;
        }
        StateVector::new(amplitudes)
    }

    /// A Haar-like random real state: i.i.d. standard normal amplitudes,
    /// normalized. Used as oracle input for correlation identities.
    pub fn random_real(n_qubits: usize, seed: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_STATE_VECTOR_QUBITS {
            return Err(Error::Capacity(format!(
                "state vectors support 1..={MAX_STATE_VECTOR_QUBITS} qubits, got {n_qubits}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Box-Muller on uniform draws keeps the dependency surface small.
        let mut amplitudes = Vec::with_capacity(1 << n_qubits);
        while amplitudes.len() < 1 << n_qubits {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (-2.0 * u1.ln()).sqrt();
            amplitudes.push(r * u2.cos());
            if amplitudes.len() < 1 << n_qubits {
                amplitudes.push(r * u2.sin());
            }
        }
        let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in &mut amplitudes {
            *a /= norm;
        }
        StateVector::new(amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Amplitude on one basis string.
    pub fn amplitude(&self, v: &BitString) -> Result<f64> {
        if v.len() != self.n_qubits {
            return Err(Error::Domain(format!(
                "bitstring length {} does not match qubit count {}",
                v.len(),
                self.n_qubits
            )));
        }
        Ok(self.amplitudes[v.to_index() as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dicke_vector_matches_amplitude_function() {
        let state = DickeState::new(6, 2).unwrap();
        let psi = StateVector::from_dicke(&state).unwrap();
        for mask in 0..(1u64 << 6) {
            let v = BitString::from_index(mask, 6).unwrap();
            assert_abs_diff_eq!(
                psi.amplitude(&v).unwrap(),
                state.amplitude(&v).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn rejects_unnormalized_input() {
        assert!(StateVector::new(vec![1.0, 1.0]).is_err());
        assert!(StateVector::new(vec![0.6, 0.8]).is_ok());
    }

    #[test]
    fn rejects_non_power_of_two_lengths() {
        assert!(StateVector::new(vec![1.0, 0.0, 0.0]).is_err());
        assert!(StateVector::new(vec![1.0]).is_err());
    }

    #[test]
    fn capacity_guard_trips_above_twenty_qubits() {
        assert!(matches!(
            StateVector::random_real(21, 0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn random_state_is_normalized_and_reproducible() {
        let a = StateVector::random_real(5, 42).unwrap();
        let b = StateVector::random_real(5, 42).unwrap();
        assert_eq!(a, b);
        let norm2: f64 = a.amplitudes().iter().map(|x| x * x).sum();
        assert_abs_diff_eq!(norm2, 1.0, epsilon = 1e-12);
        assert_ne!(a, StateVector::random_real(5, 43).unwrap());
    }
}
