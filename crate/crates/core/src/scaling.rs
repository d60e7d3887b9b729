//! Multifractal detrended fluctuation analysis.
//!
//! The input series is demeaned and cumulated into a profile. For each
//! scale `s` the profile is cut into `floor(T/s)` segments from the start
//! and `floor(T/s)` from the end, a least-squares polynomial is removed from
//! each, and the mean squared residual gives one squared fluctuation per
//! segment. The order-`q` power mean of those is `F_q(s)`, and the slope of
//! `ln F_q(s)` against `ln s` is the generalized Hurst exponent `H(q)`.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

/// Default half-width of the band around 0.5 treated as uncorrelated.
pub const DEFAULT_PERSISTENCE_BAND: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("series too short: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("scale {scale} out of range [{min}, {max}]")]
    ScaleOutOfRange { scale: usize, min: usize, max: usize },
    #[error("q = 0 is not supported")]
    ZeroQ,
    #[error("moment order must be finite, got {0}")]
    InvalidQ(f64),
    #[error("zero segment fluctuation cannot be raised to negative q = {0}")]
    ZeroFluctuationNegativeQ(f64),
    #[error("segment fluctuations must be finite and non-negative")]
    InvalidFluctuation,
    #[error("average fluctuation at scale {scale} is {value}; the series is degenerate")]
    Degenerate { scale: usize, value: f64 },
    #[error("scales must be strictly increasing and positive")]
    UnorderedScales,
    #[error("{scales} scales but {values} fluctuation values")]
    LengthMismatch { scales: usize, values: usize },
    #[error("need at least {needed} scales, got {got}")]
    TooFewScales { needed: usize, got: usize },
    #[error("no moment orders requested")]
    NoMoments,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Cumulative sum of the demeaned series.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
}

impl Profile {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn build_profile(series: &[f64]) -> Result<Profile, ScalingError> {
    if series.len() < 2 {
        return Err(ScalingError::TooShort {
            needed: 2,
            got: series.len(),
        });
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let values = series
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x - mean;
            Some(*acc)
        })
        .collect();
    Ok(Profile { values })
}

/// Orthonormal polynomial basis of degree `<= order` on the grid
/// `0..len`, built by twice-iterated modified Gram–Schmidt on monomials of
/// a centred, scaled abscissa.
#[derive(Debug, Clone)]
pub(crate) struct DetrendBasis {
    len: usize,
    vectors: Vec<Vec<f64>>,
}

impl DetrendBasis {
    pub(crate) fn new(len: usize, order: usize) -> Self {
        let centre = (len as f64 - 1.0) / 2.0;
        let x: Vec<f64> = (0..len).map(|j| (j as f64 - centre) / len as f64).collect();
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
        for degree in 0..=order {
            let mut v: Vec<f64> = x.iter().map(|xi| xi.powi(degree as i32)).collect();
            for _ in 0..2 {
                for q in &vectors {
                    let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            vectors.push(v);
        }
        Self { len, vectors }
    }

    /// Mean squared residual of `y` after projecting out the basis.
    pub(crate) fn residual_variance(&self, y: &[f64], scratch: &mut Vec<f64>) -> f64 {
        debug_assert_eq!(y.len(), self.len);
        scratch.clear();
        scratch.extend_from_slice(y);
        for q in &self.vectors {
            let dot: f64 = scratch.iter().zip(q).map(|(a, b)| a * b).sum();
            scratch.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        scratch.iter().map(|r| r * r).sum::<f64>() / self.len as f64
    }
}

fn check_scale(len: usize, s: usize, order: usize) -> Result<(), ScalingError> {
    let (min, max) = (order + 2, len / 4);
    if s < min || s > max {
        return Err(ScalingError::ScaleOutOfRange { scale: s, min, max });
    }
    Ok(())
}

fn fluctuations_with_basis(profile: &[f64], s: usize, basis: &DetrendBasis) -> Vec<f64> {
    let t = profile.len();
    let segments = t / s;
    let mut scratch = Vec::with_capacity(s);
    let forward = (0..segments).map(|v| v * s);
    let backward = (0..segments).map(|v| t - (v + 1) * s);
    forward
        .chain(backward)
        .map(|start| basis.residual_variance(&profile[start..start + s], &mut scratch))
        .collect()
}

/// Squared fluctuation of every segment at scale `s`: the `floor(T/s)`
/// segments taken from the start followed by the `floor(T/s)` taken from
/// the end. Requires `order + 2 <= s <= floor(T/4)`.
pub fn segment_fluctuations(profile: &Profile, s: usize, order: usize) -> Result<Vec<f64>, ScalingError> {
    check_scale(profile.len(), s, order)?;
    let basis = DetrendBasis::new(s, order);
    Ok(fluctuations_with_basis(&profile.values, s, &basis))
}

/// Order-`q` power mean of segment RMS fluctuations:
/// `( mean_i (F^2_i)^(q/2) )^(1/q)`.
pub fn average_fluctuation(segfluct: &[f64], q: f64) -> Result<f64, ScalingError> {
    if q == 0.0 {
        return Err(ScalingError::ZeroQ);
    }
    if !q.is_finite() {
        return Err(ScalingError::InvalidQ(q));
    }
    if segfluct.is_empty() || segfluct.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(ScalingError::InvalidFluctuation);
    }
    if q < 0.0 && segfluct.contains(&0.0) {
        return Err(ScalingError::ZeroFluctuationNegativeQ(q));
    }
    let half_q = q / 2.0;
    let mean = segfluct.iter().map(|f| f.powf(half_q)).sum::<f64>() / segfluct.len() as f64;
    Ok(mean.powf(1.0 / q))
}

/// `F_q(s)` for one moment order over an increasing set of scales.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationProfile {
    q: f64,
    scales: Vec<usize>,
    fq: Vec<f64>,
}

impl FluctuationProfile {
    pub fn new(q: f64, scales: Vec<usize>, fq: Vec<f64>) -> Result<Self, ScalingError> {
        if scales.len() != fq.len() {
            return Err(ScalingError::LengthMismatch {
                scales: scales.len(),
                values: fq.len(),
            });
        }
        if scales.first() == Some(&0) || scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ScalingError::UnorderedScales);
        }
        if let Some((i, &v)) = fq.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(ScalingError::Degenerate {
                scale: scales[i],
                value: v,
            });
        }
        Ok(Self { q, scales, fq })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn fq(&self) -> &[f64] {
        &self.fq
    }

    /// Columns `s,F_q(s)`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ScalingError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["s", "F_q(s)"])?;
        for (s, f) in self.scales.iter().zip(&self.fq) {
            w.write_record([s.to_string(), f.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// OLS fit of `ln F_q(s) = log_intercept + hurst * ln s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub q: f64,
    pub hurst: f64,
    pub log_intercept: f64,
    pub r_squared: f64,
    pub stderr_hurst: f64,
}

impl ScalingFit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit serializes")
    }
}

pub fn fit_scaling(fp: &FluctuationProfile) -> Result<ScalingFit, ScalingError> {
    let n = fp.scales.len();
    if n < 3 {
        return Err(ScalingError::TooFewScales { needed: 3, got: n });
    }
    let x: Vec<f64> = fp.scales.iter().map(|&s| (s as f64).ln()).collect();
    let y: Vec<f64> = fp.fq.iter().map(|f| f.ln()).collect();
    let nf = n as f64;
    let x_mean = x.iter().sum::<f64>() / nf;
    let y_mean = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(&y) {
        let (dx, dy) = (xi - x_mean, yi - y_mean);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(ScalingFit {
        q: fp.q,
        hurst: slope,
        log_intercept: intercept,
        r_squared,
        stderr_hurst: (sse / (nf - 2.0) / sxx).sqrt(),
    })
}

/// Every integer scale in `[s_min, s_max]`.
pub fn scale_range(s_min: usize, s_max: usize) -> Vec<usize> {
    (s_min..=s_max).collect()
}

/// Fluctuation function and scaling fit for one moment order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentScaling {
    pub fluctuations: FluctuationProfile,
    pub fit: ScalingFit,
}

/// Full MF-DFA: one [`MomentScaling`] per entry of `qs`, in the same order.
/// Requires `series.len() >= 4 * max(scales)`.
pub fn mfdfa(series: &[f64], scales: &[usize], qs: &[f64], order: usize) -> Result<Vec<MomentScaling>, ScalingError> {
    if qs.is_empty() {
        return Err(ScalingError::NoMoments);
    }
    for &q in qs {
        if q == 0.0 {
            return Err(ScalingError::ZeroQ);
        }
        if !q.is_finite() {
            return Err(ScalingError::InvalidQ(q));
        }
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ScalingError::UnorderedScales);
    }
    let max_scale = scales.last().copied().unwrap_or(0);
    if series.len() < 4 * max_scale {
        return Err(ScalingError::TooShort {
            needed: 4 * max_scale,
            got: series.len(),
        });
    }
    let profile = build_profile(series)?;
    for &s in scales {
        check_scale(profile.len(), s, order)?;
    }

    let mut fq: Vec<Vec<f64>> = vec![Vec::with_capacity(scales.len()); qs.len()];
    for &s in scales {
        let basis = DetrendBasis::new(s, order);
        let segs = fluctuations_with_basis(&profile.values, s, &basis);
        for (row, &q) in fq.iter_mut().zip(qs) {
            row.push(average_fluctuation(&segs, q)?);
        }
    }
    qs.iter()
        .zip(fq)
        .map(|(&q, values)| {
            let fluctuations = FluctuationProfile::new(q, scales.to_vec(), values)?;
            let fit = fit_scaling(&fluctuations)?;
            Ok(MomentScaling { fluctuations, fit })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Persistence {
    AntiPersistent,
    Uncorrelated,
    Persistent,
}

/// Classifies a Hurst exponent relative to 0.5 with a tolerance band of
/// half-width `band`.
pub fn classify_persistence(hurst: f64, band: f64) -> Persistence {
    if hurst < 0.5 - band {
        Persistence::AntiPersistent
    } else if hurst > 0.5 + band {
        Persistence::Persistent
    } else {
        Persistence::Uncorrelated
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_fgn, gen_white, rng};
    use proptest::prelude::*;
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn profile_examples() {
        assert_eq!(build_profile(&[1.0, -1.0, 1.0, -1.0]).unwrap().values(), &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(build_profile(&[5.0, 5.0, 5.0]).unwrap().values(), &[0.0, 0.0, 0.0]);
        assert_eq!(build_profile(&[1.0, 2.0, 3.0]).unwrap().values(), &[-1.0, -1.0, 0.0]);
        assert!(matches!(build_profile(&[1.0]), Err(ScalingError::TooShort { .. })));
    }

    #[test]
    fn profile_closes() {
        let x = gen_white(3.0, 5000, 1).unwrap();
        let p = build_profile(&x).unwrap();
        let tol = 1e-9 * 5000.0 * 3.0;
        assert!(p.values().last().unwrap().abs() < tol);
    }

    /// Independent check: materialize every segment and solve the 2x2
    /// normal equations for a straight line directly.
    fn naive_linear_fluctuations(profile: &[f64], s: usize) -> Vec<f64> {
        let t = profile.len();
        let n_seg = t / s;
        let mut starts: Vec<usize> = (0..n_seg).map(|v| v * s).collect();
        starts.extend((0..n_seg).map(|v| t - (v + 1) * s));
        starts
            .into_iter()
            .map(|start| {
                let seg: Vec<f64> = profile[start..start + s].to_vec();
                let xs: Vec<f64> = (1..=s).map(|i| i as f64).collect();
                let (sx, sy) = (xs.iter().sum::<f64>(), seg.iter().sum::<f64>());
                let sxx: f64 = xs.iter().map(|x| x * x).sum();
                let sxy: f64 = xs.iter().zip(&seg).map(|(x, y)| x * y).sum();
                let n = s as f64;
                let det = n * sxx - sx * sx;
                let b = (n * sxy - sx * sy) / det;
                let a = (sy - b * sx) / n;
                xs.iter()
                    .zip(&seg)
                    .map(|(x, y)| (y - a - b * x).powi(2))
                    .sum::<f64>()
                    / n
            })
            .collect()
    }

    #[test]
    fn linear_profile_has_zero_fluctuation() {
        let p = build_profile(&[2.0; 40]).unwrap();
        assert!(segment_fluctuations(&p, 5, 1).unwrap().iter().all(|f| *f == 0.0));
        // a linear ramp profile: input is a constant after demeaning plus trend
        let ramp = Profile {
            values: (0..40).map(|i| 0.3 * i as f64 - 2.0).collect(),
        };
        assert!(segment_fluctuations(&ramp, 7, 1).unwrap().iter().all(|f| f.abs() < 1e-20));
    }

    #[test]
    fn matches_naive_segment_oracle() {
        let mut r = rng(2024, 0);
        let x: Vec<f64> = (0..20).map(|_| r.random_range(-1.0..1.0)).collect();
        let p = build_profile(&x).unwrap();
        let fast = segment_fluctuations(&p, 5, 1).unwrap();
        let slow = naive_linear_fluctuations(p.values(), 5);
        assert_eq!(fast.len(), 8);
        for (a, b) in fast.iter().zip(&slow) {
            assert!(close(*a, *b, 1e-10), "{a} vs {b}");
        }
    }

    #[test]
    fn divisible_length_gives_mirrored_sets() {
        let x = gen_white(1.0, 60, 4).unwrap();
        let p = build_profile(&x).unwrap();
        let f = segment_fluctuations(&p, 15, 1).unwrap();
        let (fw, bw) = f.split_at(4);
        let mut bw = bw.to_vec();
        bw.reverse();
        assert_eq!(fw, &bw[..]);
    }

    #[test]
    fn scale_bounds() {
        let p = build_profile(&gen_white(1.0, 40, 1).unwrap()).unwrap();
        assert!(matches!(segment_fluctuations(&p, 2, 1), Err(ScalingError::ScaleOutOfRange { .. })));
        assert!(matches!(segment_fluctuations(&p, 11, 1), Err(ScalingError::ScaleOutOfRange { .. })));
        assert!(segment_fluctuations(&p, 10, 1).is_ok());
        assert!(segment_fluctuations(&p, 3, 1).is_ok());
        assert!(segment_fluctuations(&p, 3, 2).is_err());
    }

    #[test]
    fn average_fluctuation_examples() {
        assert!(close(average_fluctuation(&[9.0; 5], 2.0).unwrap(), 3.0, 1e-15));
        assert!(close(average_fluctuation(&[9.0; 5], -3.0).unwrap(), 3.0, 1e-14));
        assert!(close(average_fluctuation(&[1.0, 4.0], 2.0).unwrap(), 1.5811388300841898, 1e-15));
        assert!(close(average_fluctuation(&[1.0, 4.0], 4.0).unwrap(), 1.7074764851741444, 1e-15));
        assert!(matches!(average_fluctuation(&[1.0], 0.0), Err(ScalingError::ZeroQ)));
        assert!(matches!(
            average_fluctuation(&[0.0, 1.0], -2.0),
            Err(ScalingError::ZeroFluctuationNegativeQ(_))
        ));
        assert!(matches!(average_fluctuation(&[-1.0], 2.0), Err(ScalingError::InvalidFluctuation)));
    }

    #[test]
    fn exact_power_law_fit() {
        let scales = scale_range(10, 50);
        let fq = scales.iter().map(|&s| 2.0 * (s as f64).powf(0.6)).collect();
        let fit = fit_scaling(&FluctuationProfile::new(2.0, scales, fq).unwrap()).unwrap();
        assert!(close(fit.hurst, 0.6, 1e-12));
        assert!(close(fit.log_intercept, 2f64.ln(), 1e-12));
        assert!(close(fit.r_squared, 1.0, 1e-12));
        assert!(fit.stderr_hurst < 1e-12);
    }

    #[test]
    fn flat_fluctuations_have_zero_slope() {
        let scales = scale_range(10, 50);
        let fq = vec![0.7; scales.len()];
        let fit = fit_scaling(&FluctuationProfile::new(2.0, scales, fq).unwrap()).unwrap();
        assert!(close(fit.hurst, 0.0, 1e-14));
    }

    #[test]
    fn fluctuation_profile_invariants() {
        assert!(matches!(
            FluctuationProfile::new(2.0, vec![10, 10, 12], vec![1.0; 3]),
            Err(ScalingError::UnorderedScales)
        ));
        assert!(matches!(
            FluctuationProfile::new(2.0, vec![10, 11, 12], vec![1.0, 0.0, 1.0]),
            Err(ScalingError::Degenerate { scale: 11, .. })
        ));
        assert!(matches!(
            FluctuationProfile::new(2.0, vec![10, 11], vec![1.0]),
            Err(ScalingError::LengthMismatch { .. })
        ));
        let two = FluctuationProfile::new(2.0, vec![10, 11], vec![1.0, 2.0]).unwrap();
        assert!(matches!(fit_scaling(&two), Err(ScalingError::TooFewScales { .. })));
    }

    #[test]
    fn white_noise_hurst_near_half() {
        let x = gen_white(1.0, 10_000, 77).unwrap();
        let out = mfdfa(&x, &scale_range(10, 50), &[2.0], 1).unwrap();
        let h = out[0].fit.hurst;
        assert!((0.45..=0.55).contains(&h), "{h}");
    }

    #[test]
    fn fgn_persistent_and_anti_persistent() {
        let scales = scale_range(10, 50);
        let x = gen_fgn(0.7, 1.0, 10_000, 7).unwrap();
        let h = mfdfa(&x, &scales, &[2.0], 1).unwrap()[0].fit.hurst;
        assert!((0.65..=0.75).contains(&h), "H=0.7 -> {h}");
        let x = gen_fgn(0.3, 1.0, 10_000, 7).unwrap();
        let h = mfdfa(&x, &scales, &[2.0], 1).unwrap()[0].fit.hurst;
        assert!((0.25..=0.35).contains(&h), "H=0.3 -> {h}");
    }

    #[test]
    fn monofractal_flatness() {
        let x = gen_fgn(0.7, 1.0, 10_000, 8).unwrap();
        let out = mfdfa(&x, &scale_range(10, 50), &[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        let hs: Vec<f64> = out.iter().map(|m| m.fit.hurst).collect();
        let spread = hs.iter().cloned().fold(f64::MIN, f64::max) - hs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 0.1, "{hs:?}");
        assert_eq!(out.iter().map(|m| m.fit.q).collect::<Vec<_>>(), [1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn shuffling_destroys_memory() {
        let mut x = gen_fgn(0.8, 1.0, 10_000, 9).unwrap();
        let mut r = rng(9, 1);
        for i in (1..x.len()).rev() {
            x.swap(i, r.random_range(0..=i));
        }
        let h = mfdfa(&x, &scale_range(10, 50), &[2.0], 1).unwrap()[0].fit.hurst;
        assert!((0.45..=0.55).contains(&h), "{h}");
    }

    #[test]
    fn mfdfa_preconditions() {
        let x = gen_white(1.0, 150, 1).unwrap();
        assert!(matches!(
            mfdfa(&x, &scale_range(10, 50), &[2.0], 1),
            Err(ScalingError::TooShort { .. })
        ));
        let x = gen_white(1.0, 400, 1).unwrap();
        assert!(matches!(mfdfa(&x, &scale_range(10, 50), &[0.0], 1), Err(ScalingError::ZeroQ)));
        assert!(matches!(mfdfa(&x, &scale_range(10, 50), &[], 1), Err(ScalingError::NoMoments)));
        assert!(matches!(
            mfdfa(&[1.0; 400], &scale_range(10, 50), &[2.0], 1),
            Err(ScalingError::Degenerate { .. })
        ));
    }

    #[test]
    fn higher_order_detrending() {
        let x = gen_fgn(0.7, 1.0, 8000, 12).unwrap();
        let h = mfdfa(&x, &scale_range(10, 50), &[2.0], 2).unwrap()[0].fit.hurst;
        assert!((0.6..=0.8).contains(&h), "{h}");
    }

    #[test]
    fn classification() {
        assert_eq!(classify_persistence(0.5, DEFAULT_PERSISTENCE_BAND), Persistence::Uncorrelated);
        assert_eq!(classify_persistence(0.7, 0.01), Persistence::Persistent);
        assert_eq!(classify_persistence(0.49, 0.02), Persistence::Uncorrelated);
        assert_eq!(classify_persistence(0.3, 0.01), Persistence::AntiPersistent);
    }

    #[test]
    fn exports() {
        let fp = FluctuationProfile::new(2.0, vec![10, 20, 30], vec![1.0, 1.5, 2.25]).unwrap();
        let mut buf = Vec::new();
        fp.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "s,F_q(s)\n10,1\n20,1.5\n30,2.25\n");
        let v: serde_json::Value = serde_json::from_str(&fit_scaling(&fp).unwrap().to_json()).unwrap();
        for key in ["q", "hurst", "log_intercept", "r_squared", "stderr_hurst"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    proptest! {
        #[test]
        fn brute_force_equivalence(
            x in prop::collection::vec(-10.0f64..10.0, 12..=50),
            s_pick in 0usize..100,
        ) {
            let p = build_profile(&x).unwrap();
            let max = x.len() / 4;
            let s = 3 + s_pick % (max - 2);
            let fast = segment_fluctuations(&p, s, 1).unwrap();
            let slow = naive_linear_fluctuations(p.values(), s);
            prop_assert_eq!(fast.len(), slow.len());
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
            }
        }

        #[test]
        fn polynomial_profiles_detrend_exactly(
            coeffs in prop::collection::vec(-5.0f64..5.0, 3),
            order in 1usize..=2,
            s in 4usize..12,
        ) {
            // a profile that is one polynomial of degree `order` everywhere
            let t = 4 * s + 3;
            let values: Vec<f64> = (0..t)
                .map(|i| {
                    let x = i as f64 / t as f64;
                    (0..=order).map(|d| coeffs[d] * x.powi(d as i32)).sum()
                })
                .collect();
            let p = Profile { values };
            for f in segment_fluctuations(&p, s, order).unwrap() {
                prop_assert!(f.abs() < 1e-9);
            }
        }

        #[test]
        fn hurst_scale_invariant(k in 1e-3f64..1e3, seed in 0u64..1000) {
            let x = gen_white(1.0, 1000, seed).unwrap();
            let y: Vec<f64> = x.iter().map(|v| v * k).collect();
            let scales = scale_range(10, 50);
            let a = mfdfa(&x, &scales, &[2.0, 3.0], 1).unwrap();
            let b = mfdfa(&y, &scales, &[2.0, 3.0], 1).unwrap();
            for (ma, mb) in a.iter().zip(&b) {
                prop_assert!((ma.fit.hurst - mb.fit.hurst).abs() < 1e-12);
                prop_assert!((mb.fit.log_intercept - ma.fit.log_intercept - k.ln()).abs() < 1e-12);
            }
        }
    }
}
