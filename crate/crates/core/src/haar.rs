//! Haar-distributed unitaries and Monte Carlo integration over `U(d)`.
//!
//! Sample `index` under `seed` is drawn from a ChaCha stream selected by the
//! index, so the map `(seed, index) -> unitary` is a pure function and chunks can
//! be evaluated on any number of threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use num_complex::Complex64;

use crate::linalg::Matrix;
use crate::witness::{WitnessError, WitnessFunction};

pub const DEFAULT_CHUNK_SIZE: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HaarError {
    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("chunk size must be positive")]
    ZeroChunkSize,
    #[error("witness dimension {witness} does not match sampler dimension {sampler}")]
    DimensionMismatch { witness: usize, sampler: usize },
    #[error(transparent)]
    Witness(#[from] WitnessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub dim: usize,
    pub seed: u64,
    pub chunk_size: usize,
}

impl SamplerConfig {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn validate(&self) -> Result<(), HaarError> {
        if self.dim == 0 {
            return Err(HaarError::ZeroDimension);
        }
        if self.chunk_size == 0 {
            return Err(HaarError::ZeroChunkSize);
        }
        Ok(())
    }
}

/// Monte Carlo estimate of a Haar integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub mean: f64,
    pub stderr: f64,
    #[serde(rename = "n")]
    pub n_samples: usize,
    pub seed: u64,
}

impl IntegralEstimate {
    /// `mean ± k·stderr`.
    pub fn interval(&self, k: f64) -> (f64, f64) {
        (self.mean - k * self.stderr, self.mean + k * self.stderr)
    }

    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// A standard complex Gaussian: real and imaginary parts i.i.d. `N(0, 1/2)`.
fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix -> QR -> multiply column `j` of `Q` by `conj(R_jj)/|R_jj|`.
///
/// Without the phase correction `Q` is not Haar distributed.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> Matrix {
    let ginibre = Matrix::from_fn_mut(dim, || complex_gaussian(rng));
    let (q, r) = ginibre.qr();
    let phases: Vec<Complex64> = (0..dim)
        .map(|j| {
            let rjj = r.get(j, j);
            if rjj.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                rjj.conj() / rjj.norm()
            }
        })
        .collect();
    Matrix::from_fn(dim, |i, j| q.get(i, j) * phases[j])
}

/// The `index`-th Haar sample of the stream defined by `cfg.seed`.
pub fn sample_unitary(cfg: &SamplerConfig, index: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    haar_unitary(cfg.dim, &mut rng)
}

/// Count, mean and centred sum of squares of one chunk.
#[derive(Debug, Clone, Copy)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn from_values(values: impl Iterator<Item = f64>) -> Self {
        let mut acc = Moments {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        };
        for x in values {
            acc.n += 1;
            let delta = x - acc.mean;
            acc.mean += delta / acc.n as f64;
            acc.m2 += delta * (x - acc.mean);
        }
        acc
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64,
        }
    }
}

/// Integrates an arbitrary function of the sample over `n` Haar unitaries.
///
/// Chunks are evaluated in parallel and merged in chunk order, so the result is
/// bit-identical for fixed `(seed, n, chunk_size)` regardless of thread count.
pub fn integrate_fn<F>(f: F, cfg: &SamplerConfig, n: usize) -> Result<IntegralEstimate, HaarError>
where
    F: Fn(&Matrix) -> Result<f64, WitnessError> + Sync,
{
    cfg.validate()?;
    if n < 2 {
        return Err(HaarError::TooFewSamples(n));
    }
    let n_chunks = n.div_ceil(cfg.chunk_size);
    let chunks: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * cfg.chunk_size;
            let end = (start + cfg.chunk_size).min(n);
            let values = (start..end)
                .map(|i| f(&sample_unitary(cfg, i as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Moments::from_values(values.into_iter()))
        })
        .collect::<Result<_, WitnessError>>()?;
    let total = chunks.into_iter().fold(
        Moments {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        },
        Moments::merge,
    );
    let variance = total.m2 / (total.n - 1) as f64;
    Ok(IntegralEstimate {
        mean: total.mean,
        stderr: (variance / total.n as f64).sqrt(),
        n_samples: total.n,
        seed: cfg.seed,
    })
}

/// Monte Carlo estimate of `∫ w dμ` over `U(cfg.dim)`.
pub fn integrate(
    w: &WitnessFunction,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<IntegralEstimate, HaarError> {
    if w.dim() != cfg.dim {
        return Err(HaarError::DimensionMismatch {
            witness: w.dim(),
            sampler: cfg.dim,
        });
    }
    integrate_fn(|z| w.evaluate(z), cfg, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Tolerance;
    use crate::witness::{constant, h0_witness};

    #[test]
    fn samples_are_unitary_and_reproducible() {
        let tol = Tolerance::default();
        for dim in 1..=8 {
            let cfg = SamplerConfig::new(dim, 42);
            for index in 0..20 {
                let u = sample_unitary(&cfg, index);
                assert!(u.is_unitary(&tol), "dim {dim} index {index}");
                assert_eq!(u, sample_unitary(&cfg, index));
            }
        }
        let cfg = SamplerConfig::new(3, 42);
        assert_ne!(sample_unitary(&cfg, 0), sample_unitary(&cfg, 1));
        assert_ne!(
            sample_unitary(&cfg, 0),
            sample_unitary(&SamplerConfig::new(3, 43), 0)
        );
    }

    #[test]
    fn constant_integrates_exactly() {
        let cfg = SamplerConfig::new(3, 1).with_chunk_size(7);
        let est = integrate(&constant(3, 1.0), &cfg, 100).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.n_samples, 100);
        assert_eq!(est.seed, 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = SamplerConfig::new(3, 1);
        assert_eq!(
            integrate(&constant(3, 1.0), &cfg, 1),
            Err(HaarError::TooFewSamples(1))
        );
        assert!(matches!(
            integrate(&h0_witness(4), &cfg, 10),
            Err(HaarError::DimensionMismatch { .. })
        ));
        assert_eq!(
            integrate(&constant(3, 1.0), &cfg.with_chunk_size(0), 10),
            Err(HaarError::ZeroChunkSize)
        );
    }

    #[test]
    fn chunk_merge_matches_single_pass() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let whole = Moments::from_values(values.iter().copied());
        let merged = values
            .chunks(64)
            .map(|c| Moments::from_values(c.iter().copied()))
            .reduce(Moments::merge)
            .unwrap();
        assert_eq!(whole.n, merged.n);
        assert!((whole.mean - merged.mean).abs() < 1e-12);
        assert!((whole.m2 - merged.m2).abs() < 1e-8 * whole.m2);
    }

    #[test]
    fn estimate_serializes_with_short_field_names() {
        let est = IntegralEstimate {
            mean: 1.5,
            stderr: 0.25,
            n_samples: 10,
            seed: 7,
        };
        let json = serde_json::to_value(est).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"mean": 1.5, "stderr": 0.25, "n": 10, "seed": 7})
        );
    }
}
