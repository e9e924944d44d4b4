//! Monte-Carlo bookkeeping: mergeable accumulators, probability estimates,
//! seed derivation and least-squares fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Running mean/variance (Welford), mergeable with Chan's formula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut acc = Self::new();
        for &v in values {
            acc.push(v);
        }
        acc
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// A Monte-Carlo probability with its binomial standard error and, when
/// available, the exact value it should reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub closed_form: Option<f64>,
}

impl ProbabilityEstimate {
    pub fn from_hits(hits: usize, trials: usize, closed_form: Option<f64>) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            estimate: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
            closed_form,
        }
    }

    /// Distance to the closed form in units of the standard error.
    ///
    /// When the empirical standard error vanishes (all hits or all misses) the
    /// binomial error of the closed form is used instead, so a point estimate of
    /// exactly 1 against an exact 0.9999 is not reported as infinitely far.
    pub fn sigma_distance(&self) -> Option<f64> {
        let exact = self.closed_form?;
        let diff = (self.estimate - exact).abs();
        let sigma = if self.stderr > 0.0 {
            self.stderr
        } else {
            (exact * (1.0 - exact) / self.trials as f64).sqrt()
        };
        if sigma == 0.0 {
            Some(if diff == 0.0 { 0.0 } else { f64::INFINITY })
        } else {
            Some(diff / sigma)
        }
    }
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a hash of an experiment name, used as the stream identifier.
pub fn experiment_id(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Per-realization seed. Depends only on (base, stream, index), never on
/// scheduling, so results are identical for any worker count.
pub fn derive_seed(base_seed: u64, stream: u64, index: u64) -> u64 {
    mix64(mix64(mix64(base_seed) ^ stream) ^ index)
}

/// Ordered parallel map over realization indices. Results come back in index
/// order regardless of how rayon schedules the work.
pub fn par_realizations<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y = slope·x + intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|&b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
