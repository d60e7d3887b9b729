//! Seeded reference generators: fractional Gaussian noise, Gaussian white
//! noise and GARCH(1,1) return paths.
//!
//! All randomness comes from ChaCha8 seeded with `GeneratorSpec::seed`. A
//! generator consumes stream 0 of that seed; callers that need several
//! independent series from one seed use [`rng`] with distinct stream ids.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::garch::{GarchError, GarchParams};

/// Draws discarded before a GARCH path is recorded.
pub const GARCH_BURN_IN: usize = 500;

/// Times the circulant embedding is doubled before giving up.
const MAX_EMBEDDING_DOUBLINGS: u32 = 6;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("Hurst exponent must lie in (0, 1), got {0}")]
    HurstOutOfRange(f64),
    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("length must be at least 2, got {0}")]
    TooShort(usize),
    #[error(transparent)]
    Garch(#[from] GarchError),
    #[error("circulant embedding not positive semi-definite (min eigenvalue {min_eigenvalue:e} at size {size})")]
    Embedding { size: usize, min_eigenvalue: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    Fgn { hurst: f64, sigma: f64 },
    GaussianWhite { sigma: f64 },
    Garch { params: GarchParams },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn fgn(hurst: f64, sigma: f64, n: usize, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::Fgn { hurst, sigma },
            n,
            seed,
        }
    }

    pub fn white(sigma: f64, n: usize, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::GaussianWhite { sigma },
            n,
            seed,
        }
    }

    pub fn garch(params: GarchParams, n: usize, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::Garch { params },
            n,
            seed,
        }
    }
}

/// Deterministic generator for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate(spec: &GeneratorSpec) -> Result<Vec<f64>, SynthError> {
    match spec.kind {
        GeneratorKind::Fgn { hurst, sigma } => gen_fgn(hurst, sigma, spec.n, spec.seed),
        GeneratorKind::GaussianWhite { sigma } => gen_white(sigma, spec.n, spec.seed),
        GeneratorKind::Garch { params } => gen_garch(&params, spec.n, spec.seed),
    }
}

/// Autocovariance of unit-variance fGn at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let two_h = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

fn check_sigma(sigma: f64) -> Result<(), SynthError> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(SynthError::InvalidSigma(sigma))
    }
}

/// Eigenvalues of the circulant embedding of size `2 * half`.
fn embedding_eigenvalues(hurst: f64, half: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let m = 2 * half;
    let mut row = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..=half {
        row[k].re = fgn_autocovariance(hurst, k);
    }
    for k in 1..half {
        row[m - k].re = row[k].re;
    }
    planner.plan_fft_forward(m).process(&mut row);
    row.into_iter().map(|c| c.re).collect()
}

/// Fractional Gaussian noise by circulant embedding (Davies–Harte).
///
/// The embedding has size `2N` with `N` the smallest power of two `>= n`,
/// doubled if rounding leaves a materially negative eigenvalue.
pub fn gen_fgn(hurst: f64, sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>, SynthError> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(SynthError::HurstOutOfRange(hurst));
    }
    check_sigma(sigma)?;
    if n < 2 {
        return Err(SynthError::TooShort(n));
    }

    let mut planner = FftPlanner::new();
    let mut half = n.next_power_of_two();
    let mut doublings = 0;
    let eigen = loop {
        let eigen = embedding_eigenvalues(hurst, half, &mut planner);
        let max = eigen.iter().copied().fold(0.0, f64::max);
        let min = eigen.iter().copied().fold(f64::INFINITY, f64::min);
        if min >= -1e-10 * max {
            break eigen;
        }
        if doublings == MAX_EMBEDDING_DOUBLINGS {
            return Err(SynthError::Embedding {
                size: 2 * half,
                min_eigenvalue: min,
            });
        }
        doublings += 1;
        half *= 2;
    };

    let m = 2 * half;
    let mf = m as f64;
    let mut rng = rng(seed, 0);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let amp = |k: usize, denom: f64| (eigen[k].max(0.0) / denom).sqrt();

    let mut w = vec![Complex64::new(0.0, 0.0); m];
    w[0].re = amp(0, mf) * normal();
    w[half].re = amp(half, mf) * normal();
    for k in 1..half {
        let a = amp(k, 2.0 * mf);
        let z = Complex64::new(a * normal(), a * normal());
        w[k] = z;
        w[m - k] = z.conj();
    }
    planner.plan_fft_forward(m).process(&mut w);
    Ok(w[..n].iter().map(|c| sigma * c.re).collect())
}

pub fn gen_white(sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>, SynthError> {
    check_sigma(sigma)?;
    let mut rng = rng(seed, 0);
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect())
}

/// GARCH(1,1) returns `r_t = sqrt(h_t) z_t`, started at the unconditional
/// variance with [`GARCH_BURN_IN`] draws discarded.
pub fn gen_garch(params: &GarchParams, n: usize, seed: u64) -> Result<Vec<f64>, SynthError> {
    let params = GarchParams::new(params.omega(), params.alpha(), params.beta())?;
    let mut rng = rng(seed, 0);
    let mut h = params.unconditional_variance();
    let mut out = Vec::with_capacity(n);
    for t in 0..n + GARCH_BURN_IN {
        let z: f64 = StandardNormal.sample(&mut rng);
        let r = h.sqrt() * z;
        if t >= GARCH_BURN_IN {
            out.push(r);
        }
        h = params.omega() + params.alpha() * r * r + params.beta() * h;
    }
    Ok(out)
}
