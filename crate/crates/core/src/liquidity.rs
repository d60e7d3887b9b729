//! Scaling-based measures of trading activity across horizons.
//!
//! Each scale `s` is read as an investment horizon. With `F(s)` the q = 2
//! fluctuation function and `H` its fitted exponent, the rescaled
//! fluctuation `R(s) = F(s)^2 / s^(2H)` is constant when variance scales
//! exactly. The measures summarize how far a window departs from that:
//!
//! * `f0 = e^c`, the fitted prefactor. Numerically this is the fitted
//!   fluctuation at `s = 1`; it stands in for activity at the shortest
//!   horizons.
//! * `f_sigma`, the sample standard deviation of `R(s)` over the scales.
//! * `f_range`, `max R - min R`.
//! * `f_ratio`, `max R / min R`; equal to 1 under exact scaling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scaling::{FluctuationProfile, ScalingFit};

#[derive(Debug, Error)]
pub enum LiquidityError {
    #[error("rescaling requires the q = 2 fluctuation function, got q = {0}")]
    WrongMoment(f64),
    #[error("need at least {needed} scales, got {got}")]
    TooFewScales { needed: usize, got: usize },
    #[error("rescaled fluctuations must be positive")]
    NonPositive,
}

/// `R(s) = F_2(s)^2 / s^(2H)` on the scales of the source profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledFluctuations {
    scales: Vec<usize>,
    r_values: Vec<f64>,
}

impl RescaledFluctuations {
    pub fn new(scales: Vec<usize>, r_values: Vec<f64>) -> Self {
        debug_assert_eq!(scales.len(), r_values.len());
        Self { scales, r_values }
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn r_values(&self) -> &[f64] {
        &self.r_values
    }

    fn extremes(&self) -> (f64, f64) {
        self.r_values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)))
    }
}

pub fn rescale(fp: &FluctuationProfile, fit: &ScalingFit) -> Result<RescaledFluctuations, LiquidityError> {
    if fp.q() != 2.0 {
        return Err(LiquidityError::WrongMoment(fp.q()));
    }
    Ok(rescale_with_exponent(fp, fit.hurst))
}

/// Rescaling with an externally supplied exponent.
pub fn rescale_with_exponent(fp: &FluctuationProfile, hurst: f64) -> RescaledFluctuations {
    let r_values = fp
        .scales()
        .iter()
        .zip(fp.fq())
        .map(|(&s, f)| f * f / (s as f64).powf(2.0 * hurst))
        .collect();
    RescaledFluctuations::new(fp.scales().to_vec(), r_values)
}

pub fn f_zero(fit: &ScalingFit) -> f64 {
    fit.log_intercept.exp()
}

/// Sample standard deviation of the rescaled fluctuations (`n - 1`
/// denominator).
pub fn f_sigma(rf: &RescaledFluctuations) -> Result<f64, LiquidityError> {
    let n = rf.r_values.len();
    if n < 2 {
        return Err(LiquidityError::TooFewScales { needed: 2, got: n });
    }
    let mean = rf.r_values.iter().sum::<f64>() / n as f64;
    let ss: f64 = rf.r_values.iter().map(|r| (r - mean).powi(2)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

pub fn f_range(rf: &RescaledFluctuations) -> Result<f64, LiquidityError> {
    if rf.r_values.is_empty() {
        return Err(LiquidityError::TooFewScales { needed: 1, got: 0 });
    }
    let (lo, hi) = rf.extremes();
    Ok(hi - lo)
}

pub fn f_ratio(rf: &RescaledFluctuations) -> Result<f64, LiquidityError> {
    if rf.r_values.is_empty() {
        return Err(LiquidityError::TooFewScales { needed: 1, got: 0 });
    }
    if rf.r_values.iter().any(|r| !(*r > 0.0)) {
        return Err(LiquidityError::NonPositive);
    }
    let (lo, hi) = rf.extremes();
    Ok(hi / lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiquidityIndicators {
    pub f0: f64,
    pub f_sigma: f64,
    pub f_range: f64,
    pub f_ratio: f64,
}

impl LiquidityIndicators {
    /// All four measures from a q = 2 fluctuation function and its fit.
    pub fn compute(fp: &FluctuationProfile, fit: &ScalingFit) -> Result<Self, LiquidityError> {
        let rf = rescale(fp, fit)?;
        Ok(Self {
            f0: f_zero(fit),
            f_sigma: f_sigma(&rf)?,
            f_range: f_range(&rf)?,
            f_ratio: f_ratio(&rf)?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("indicators serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::{fit_scaling, mfdfa, scale_range};
    use crate::synth::gen_fgn;
    use proptest::prelude::*;

    fn power_law(c: f64, h: f64) -> FluctuationProfile {
        let scales = scale_range(10, 50);
        let fq = scales.iter().map(|&s| c * (s as f64).powf(h)).collect();
        FluctuationProfile::new(2.0, scales, fq).unwrap()
    }

    fn rf(values: &[f64]) -> RescaledFluctuations {
        RescaledFluctuations::new((1..=values.len()).collect(), values.to_vec())
    }

    #[test]
    fn exact_power_law_rescales_to_constant() {
        let fp = power_law(1.7, 0.55);
        let fit = fit_scaling(&fp).unwrap();
        let r = rescale(&fp, &fit).unwrap();
        for v in r.r_values() {
            assert!((v - 1.7 * 1.7).abs() < 1e-9);
        }
        let ind = LiquidityIndicators::compute(&fp, &fit).unwrap();
        assert!(ind.f_sigma < 1e-9 && ind.f_range < 1e-9);
        assert!((ind.f_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn doubled_last_point_with_external_exponent() {
        let h = 0.6;
        let scales = scale_range(10, 50);
        let mut fq: Vec<f64> = scales.iter().map(|&s| (s as f64).powf(h)).collect();
        *fq.last_mut().unwrap() *= 2.0;
        let fp = FluctuationProfile::new(2.0, scales, fq).unwrap();
        let r = rescale_with_exponent(&fp, h);
        let first = r.r_values()[0];
        assert!((r.r_values().last().unwrap() - 4.0 * first).abs() < 1e-12);
        // direct evaluation: 40 values of 1 and one of 4
        let n = 41.0;
        let mean = (40.0 + 4.0) / n;
        let sd = ((40.0 * (1.0 - mean) * (1.0f64 - mean) + (4.0 - mean) * (4.0f64 - mean)) / (n - 1.0)).sqrt();
        assert!((f_sigma(&r).unwrap() - sd).abs() < 1e-12);
        assert!((f_range(&r).unwrap() - 3.0).abs() < 1e-12);
        assert!((f_ratio(&r).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_other_moments() {
        let scales = scale_range(10, 20);
        let fp = FluctuationProfile::new(3.0, scales.clone(), vec![1.0; scales.len()]).unwrap();
        let fit = fit_scaling(&fp).unwrap();
        assert!(matches!(rescale(&fp, &fit), Err(LiquidityError::WrongMoment(_))));
    }

    #[test]
    fn f_zero_examples() {
        let mut fit = fit_scaling(&power_law(1.0, 0.5)).unwrap();
        fit.log_intercept = 0.0;
        assert_eq!(f_zero(&fit), 1.0);
        fit.log_intercept = 2f64.ln();
        assert!((f_zero(&fit) - 2.0).abs() < 1e-15);
        let fit = fit_scaling(&power_law(0.04, 0.5)).unwrap();
        assert!((f_zero(&fit) - 0.04).abs() < 1e-12);
    }

    #[test]
    fn small_examples() {
        assert_eq!(f_sigma(&rf(&[2.0, 2.0, 2.0])).unwrap(), 0.0);
        assert!((f_sigma(&rf(&[1.0, 3.0])).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(f_sigma(&rf(&[1.0])), Err(LiquidityError::TooFewScales { .. })));
        assert_eq!(f_range(&rf(&[2.0, 2.0])).unwrap(), 0.0);
        assert_eq!(f_range(&rf(&[1.0, 3.0])).unwrap(), 2.0);
        assert_eq!(f_ratio(&rf(&[1.0, 3.0])).unwrap(), 3.0);
        assert_eq!(f_ratio(&rf(&[5.0, 5.0])).unwrap(), 1.0);
        assert!(matches!(f_ratio(&rf(&[0.0, 3.0])), Err(LiquidityError::NonPositive)));
    }

    #[test]
    fn recomputed_from_exported_csv() {
        let x = gen_fgn(0.7, 1.0, 500, 31).unwrap();
        let m = mfdfa(&x, &scale_range(10, 50), &[2.0], 1).unwrap().remove(0);
        let mut buf = Vec::new();
        m.fluctuations.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let r = rescale(&m.fluctuations, &m.fit).unwrap();
        for (line, got) in text.lines().skip(1).zip(r.r_values()) {
            let (s, f) = line.split_once(',').unwrap();
            let (s, f): (f64, f64) = (s.parse().unwrap(), f.parse().unwrap());
            let expected = f * f / s.powf(2.0 * m.fit.hurst);
            assert!((expected - got).abs() <= 1e-14 * expected);
        }
    }

    #[test]
    fn interior_spike_raises_every_dispersion_measure() {
        let base = power_law(0.5, 0.6);
        let before = LiquidityIndicators::compute(&base, &fit_scaling(&base).unwrap()).unwrap();
        for idx in [5usize, 20, 35] {
            let mut fq = base.fq().to_vec();
            fq[idx] *= 2.0;
            let fp = FluctuationProfile::new(2.0, base.scales().to_vec(), fq).unwrap();
            let after = LiquidityIndicators::compute(&fp, &fit_scaling(&fp).unwrap()).unwrap();
            assert!(after.f_sigma > before.f_sigma);
            assert!(after.f_range > before.f_range);
            assert!(after.f_ratio > before.f_ratio);
        }
    }

    #[test]
    fn json_fields() {
        let fp = power_law(0.04, 0.5);
        let ind = LiquidityIndicators::compute(&fp, &fit_scaling(&fp).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&ind.to_json()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["f0", "f_range", "f_ratio", "f_sigma"]);
    }

    proptest! {
        #[test]
        fn input_scaling_laws(k in 1e-2f64..1e2, seed in 0u64..500) {
            let x = gen_fgn(0.6, 1.0, 600, seed).unwrap();
            let y: Vec<f64> = x.iter().map(|v| v * k).collect();
            let scales = scale_range(10, 50);
            let a = mfdfa(&x, &scales, &[2.0], 1).unwrap().remove(0);
            let b = mfdfa(&y, &scales, &[2.0], 1).unwrap().remove(0);
            let ia = LiquidityIndicators::compute(&a.fluctuations, &a.fit).unwrap();
            let ib = LiquidityIndicators::compute(&b.fluctuations, &b.fit).unwrap();
            let rel = |p: f64, q: f64| ((p - q) / q).abs();
            prop_assert!(rel(ib.f0, k * ia.f0) < 1e-9);
            prop_assert!(rel(ib.f_sigma, k * k * ia.f_sigma) < 1e-9);
            prop_assert!(rel(ib.f_range, k * k * ia.f_range) < 1e-9);
            prop_assert!(rel(ib.f_ratio, ia.f_ratio) < 1e-9);
        }

        #[test]
        fn range_ratio_identity(values in prop::collection::vec(1e-3f64..1e3, 2..60)) {
            let r = rf(&values);
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let range = f_range(&r).unwrap();
            let ratio = f_ratio(&r).unwrap();
            prop_assert!(ratio >= 1.0);
            prop_assert!((range - (ratio - 1.0) * lo).abs() <= 1e-12 * range.max(lo));
            let zero = f_sigma(&r).unwrap() == 0.0;
            prop_assert_eq!(zero, range == 0.0);
            prop_assert_eq!(zero, ratio == 1.0);
        }
    }
}
