//! Log-space numerics shared by every module: stable softplus/logistic,
//! streaming log-sum-exp and log-binomial coefficients.

use crate::error::{Error, Result};

/// ln(1 + e^x), stable for |x| up to at least 1e4.
///
/// For x > 0 the identity softplus(x) = x + ln(1 + e^-x) is used so the
/// exponential never overflows.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function 1 / (1 + e^-x), evaluated without overflow.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Streaming log-sum-exp accumulator.
///
/// Maintains a running maximum and a rescaled sum so that terms can be
/// pushed one at a time without materializing the whole sequence. An empty
/// accumulator totals to negative infinity.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            if self.max > f64::NEG_INFINITY {
                self.sum = self.sum * (self.max - x).exp() + 1.0;
            } else {
                self.sum = 1.0;
            }
            self.max = x;
        }
    }

    pub fn total(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

/// log(sum(exp(xs))) over a slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let mut acc = LogSumExp::new();
    for &x in xs {
        acc.push(x);
    }
    acc.total()
}

/// ln C(n, k) without forming the binomial coefficient.
///
/// Uses the log-gamma function; absolute error stays below 1e-10 for
/// n <= 1024.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!(
            "log_binomial requires k <= n, got n={n}, k={k}"
        )));
    }
    use statrs::function::gamma::ln_gamma;
    Ok(ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
}

/// Deterministic seed derivation for parallel chunked sampling:
/// chunk seed = hash(seed, chunk_index) via a splitmix64-style finalizer.
pub fn mix_seed(seed: u64, chunk_index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(chunk_index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
