//! GARCH(1,1) with Gaussian innovations: likelihood, maximum-likelihood
//! fitting and volatility standardization.
//!
//! The conditional variance follows
//! `h_t = omega + alpha * r_{t-1}^2 + beta * h_{t-1}` with `h_1` supplied
//! by the caller (the fit uses the sample variance of the returns).

use std::f64::consts::PI;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ReturnSeries;
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Fits on fewer returns than this are refused.
pub const MIN_FIT_LENGTH: usize = 100;

#[derive(Debug, Error)]
pub enum GarchError {
    #[error("invalid GARCH parameters: {0}")]
    InvalidParams(String),
    #[error("need at least {needed} returns, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("initial variance must be positive, got {0}")]
    InvalidInitialVariance(f64),
    #[error("degenerate returns: all values identical")]
    Degenerate,
    #[error("likelihood evaluation failed at t = {0} (non-finite value)")]
    Evaluation(usize),
    #[error("length mismatch: {returns} returns vs {variances} variances")]
    LengthMismatch { returns: usize, variances: usize },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    omega: f64,
    alpha: f64,
    beta: f64,
}

impl GarchParams {
    /// Requires `omega > 0`, `alpha >= 0`, `beta >= 0` and `alpha + beta < 1`.
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<Self, GarchError> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(GarchError::InvalidParams(format!("omega must be > 0, got {omega}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) || !(beta.is_finite() && beta >= 0.0) {
            return Err(GarchError::InvalidParams(format!(
                "alpha and beta must be >= 0, got alpha={alpha}, beta={beta}"
            )));
        }
        if alpha + beta >= 1.0 {
            return Err(GarchError::InvalidParams(format!(
                "alpha + beta must be < 1 for stationarity, got {}",
                alpha + beta
            )));
        }
        Ok(Self { omega, alpha, beta })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta
    }

    /// `omega / (1 - alpha - beta)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }

    /// Maps the constrained parameters to an unconstrained vector:
    /// `ln omega` and the two log-odds of `(alpha, beta, 1 - alpha - beta)`.
    fn to_unconstrained(self) -> [f64; 3] {
        let slack = 1.0 - self.alpha - self.beta;
        [
            self.omega.ln(),
            (self.alpha / slack).ln(),
            (self.beta / slack).ln(),
        ]
    }

    fn from_unconstrained(x: &[f64]) -> Self {
        // softmax over (a, b, 0), shifted for overflow safety
        let m = x[1].max(x[2]).max(0.0);
        let (ea, eb, e0) = ((x[1] - m).exp(), (x[2] - m).exp(), (-m).exp());
        let total = ea + eb + e0;
        Self {
            omega: x[0].exp(),
            alpha: ea / total,
            beta: eb / total,
        }
    }
}

/// Conditional variance path, one entry per return.
pub fn variance_path(returns: &[f64], params: &GarchParams, h1: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(returns.len());
    if returns.is_empty() {
        return h;
    }
    h.push(h1);
    for r_prev in &returns[..returns.len() - 1] {
        let prev = h[h.len() - 1];
        h.push(params.omega + params.alpha * r_prev * r_prev + params.beta * prev);
    }
    h
}

/// Gaussian log-likelihood `sum_t -1/2 (ln 2pi + ln h_t + r_t^2 / h_t)`.
pub fn loglik(returns: &[f64], params: &GarchParams, h1: f64) -> Result<f64, GarchError> {
    if returns.len() < 2 {
        return Err(GarchError::TooShort {
            needed: 2,
            got: returns.len(),
        });
    }
    // re-validate: the fields are private but a Deserialize could bypass `new`
    GarchParams::new(params.omega, params.alpha, params.beta)?;
    if !(h1.is_finite() && h1 > 0.0) {
        return Err(GarchError::InvalidInitialVariance(h1));
    }
    loglik_unchecked(returns, params, h1)
}

fn loglik_unchecked(returns: &[f64], params: &GarchParams, h1: f64) -> Result<f64, GarchError> {
    let ln_2pi = (2.0 * PI).ln();
    let mut h = h1;
    let mut total = 0.0;
    for (t, &r) in returns.iter().enumerate() {
        if t > 0 {
            let r_prev = returns[t - 1];
            h = params.omega + params.alpha * r_prev * r_prev + params.beta * h;
        }
        total -= 0.5 * (ln_2pi + h.ln() + r * r / h);
        if !total.is_finite() {
            return Err(GarchError::Evaluation(t));
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchOptions {
    /// Convergence tolerance on the log-likelihood.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Subtract the sample mean before fitting. The filter then standardizes
    /// the demeaned returns.
    pub demean: bool,
}

impl Default for GarchOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 2000,
            demean: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GarchFit {
    #[serde(flatten)]
    pub params: GarchParams,
    #[serde(skip)]
    pub h: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Mean removed before fitting; 0 unless `GarchOptions::demean` was set.
    #[serde(skip)]
    pub mean: f64,
}

impl GarchFit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit serializes")
    }

    /// Writes the conditional-variance path as `date,h`.
    pub fn write_variance_csv<W: Write>(&self, writer: W, dates: &[NaiveDate]) -> Result<(), GarchError> {
        if dates.len() != self.h.len() {
            return Err(GarchError::LengthMismatch {
                returns: dates.len(),
                variances: self.h.len(),
            });
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "h"])?;
        for (d, h) in dates.iter().zip(&self.h) {
            w.write_record([d.format("%Y-%m-%d").to_string(), h.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Maximum-likelihood GARCH(1,1) by Nelder–Mead over the unconstrained
/// reparameterization. The primary start is `omega = 0.1 var(r)`,
/// `alpha = 0.05`, `beta = 0.90`; two low-persistence starts are also run and
/// the highest likelihood wins. `max_iterations` applies to each start and
/// `iterations` reports the total. A start that hits the cap without
/// converging, if it is the winner, yields `converged = false`.
pub fn fit(returns: &[f64], options: &GarchOptions) -> Result<GarchFit, GarchError> {
    if returns.len() < MIN_FIT_LENGTH {
        return Err(GarchError::TooShort {
            needed: MIN_FIT_LENGTH,
            got: returns.len(),
        });
    }
    if returns.iter().all(|r| *r == returns[0]) {
        return Err(GarchError::Degenerate);
    }
    let mean = if options.demean {
        returns.iter().sum::<f64>() / returns.len() as f64
    } else {
        0.0
    };
    let centered: Vec<f64> = returns.iter().map(|r| r - mean).collect();
    let h1 = sample_variance(&centered);
    if !(h1.is_finite() && h1 > 0.0) {
        return Err(GarchError::Degenerate);
    }

    // The likelihood has a flat ridge along beta when alpha is near zero, and
    // a single start can stall on it; the extra starts sit at low persistence
    // with omega targeting the sample variance.
    let starts = [
        GarchParams::new(0.1 * h1, 0.05, 0.90)?,
        GarchParams::new(0.45 * h1, 0.05, 0.50)?,
        GarchParams::new(0.85 * h1, 0.10, 0.05)?,
    ];
    let objective = |x: &[f64]| {
        let p = GarchParams::from_unconstrained(x);
        if !(p.omega > 0.0 && p.alpha + p.beta < 1.0) {
            return f64::INFINITY;
        }
        match loglik_unchecked(&centered, &p, h1) {
            Ok(ll) => -ll,
            Err(_) => f64::INFINITY,
        }
    };
    let nm = NelderMeadOptions {
        f_tolerance: options.tolerance,
        max_iterations: options.max_iterations,
        ..Default::default()
    };
    let mut iterations = 0;
    let mut best: Option<crate::optim::Minimum> = None;
    for start in starts {
        let run = nelder_mead(objective, &start.to_unconstrained(), &nm);
        iterations += run.iterations;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    let params = GarchParams::from_unconstrained(&best.x);
    let params = GarchParams::new(params.omega, params.alpha, params.beta)?;
    let loglik = loglik_unchecked(&centered, &params, h1)?;
    Ok(GarchFit {
        params,
        h: variance_path(&centered, &params, h1),
        loglik,
        converged: best.converged,
        iterations,
        mean,
    })
}

/// Volatility-standardized returns with dates aligned to the source.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredReturns {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

/// `(r_t - mean) / sqrt(h_t)` elementwise, where `mean` is the fit's removed
/// mean (zero by default).
pub fn standardize(returns: &[f64], fit: &GarchFit) -> Result<Vec<f64>, GarchError> {
    if returns.len() != fit.h.len() {
        return Err(GarchError::LengthMismatch {
            returns: returns.len(),
            variances: fit.h.len(),
        });
    }
    Ok(returns
        .iter()
        .zip(&fit.h)
        .map(|(r, h)| (r - fit.mean) / h.sqrt())
        .collect())
}

pub fn filter(returns: &ReturnSeries, fit: &GarchFit) -> Result<FilteredReturns, GarchError> {
    Ok(FilteredReturns {
        dates: returns.dates().to_vec(),
        values: standardize(returns.values(), fit)?,
    })
}
