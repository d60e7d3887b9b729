//! Sliding-window engine: GARCH filtering, MF-DFA and liquidity measures for
//! every window position, plus regime summaries and tabular output.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::garch::{self, GarchError, GarchOptions};
use crate::ingest::ReturnSeries;
use crate::liquidity::{LiquidityError, LiquidityIndicators};
use crate::scaling::{mfdfa, scale_range, ScalingError};

#[derive(Debug, Error)]
pub enum RollingError {
    #[error("invalid rolling configuration: {0}")]
    Config(String),
    #[error("series of {got} returns is shorter than the window of {window}")]
    TooShort { got: usize, window: usize },
    #[error(transparent)]
    Garch(#[from] GarchError),
    #[error("window ending {date}: {source}")]
    Scaling {
        date: NaiveDate,
        #[source]
        source: ScalingError,
    },
    #[error("window ending {date}: {source}")]
    Liquidity {
        date: NaiveDate,
        #[source]
        source: LiquidityError,
    },
    #[error("results must not be empty")]
    Empty,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed rolling file, line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GarchMode {
    /// One fit on the full series; windows slice the filtered returns.
    WholeSample,
    /// Every window is fitted and filtered on its own.
    PerWindow,
    /// No volatility filtering.
    None,
}

/// Which date of a window stamps its result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DateAnchor {
    Start,
    Center,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub window: usize,
    pub step: usize,
    pub s_min: usize,
    pub s_max: usize,
    pub q_set: Vec<f64>,
    pub detrend_order: usize,
    pub garch_mode: GarchMode,
    pub date_anchor: DateAnchor,
    pub demean: bool,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            window: 500,
            step: 1,
            s_min: 10,
            s_max: 50,
            q_set: vec![2.0],
            detrend_order: 1,
            garch_mode: GarchMode::WholeSample,
            date_anchor: DateAnchor::End,
            demean: false,
        }
    }
}

impl RollingConfig {
    /// Defaults with the given window and `s_max = window / 10`.
    pub fn with_window(window: usize) -> Self {
        Self {
            window,
            s_max: window / 10,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RollingError> {
        let fail = |m: String| Err(RollingError::Config(m));
        if self.step == 0 {
            return fail("step must be at least 1".into());
        }
        if self.s_min < self.detrend_order + 2 {
            return fail(format!(
                "s_min = {} must be at least detrend_order + 2 = {}",
                self.s_min,
                self.detrend_order + 2
            ));
        }
        if self.s_max < self.s_min + 2 {
            return fail(format!(
                "need at least three scales, got s_min = {} and s_max = {}",
                self.s_min, self.s_max
            ));
        }
        if self.window < 10 * self.s_min {
            return fail(format!("window = {} must be at least 10 * s_min", self.window));
        }
        if 4 * self.s_max > self.window {
            return fail(format!("s_max = {} exceeds window / 4", self.s_max));
        }
        if !self.q_set.contains(&2.0) {
            return fail("q_set must contain 2".into());
        }
        if self.q_set.iter().any(|q| *q == 0.0 || !q.is_finite()) {
            return fail("q_set entries must be finite and non-zero".into());
        }
        Ok(())
    }

    /// Number of window positions for a series of `len` returns.
    pub fn window_count(&self, len: usize) -> usize {
        if len < self.window {
            0
        } else {
            (len - self.window) / self.step + 1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub date: NaiveDate,
    pub hurst: f64,
    pub log_intercept: f64,
    pub stderr_hurst: f64,
    pub r_squared: f64,
    pub indicators: LiquidityIndicators,
    pub garch_converged: bool,
    /// `(q, H(q))` for every configured q other than 2.
    pub generalized: Vec<(f64, f64)>,
}

fn analyze_window(
    values: &[f64],
    date: NaiveDate,
    config: &RollingConfig,
    garch_converged: bool,
) -> Result<WindowResult, RollingError> {
    let scales = scale_range(config.s_min, config.s_max);
    let results = mfdfa(values, &scales, &config.q_set, config.detrend_order)
        .map_err(|source| RollingError::Scaling { date, source })?;
    let main = results
        .iter()
        .find(|m| m.fit.q == 2.0)
        .expect("validated q_set contains 2");
    let indicators = LiquidityIndicators::compute(&main.fluctuations, &main.fit)
        .map_err(|source| RollingError::Liquidity { date, source })?;
    Ok(WindowResult {
        date,
        hurst: main.fit.hurst,
        log_intercept: main.fit.log_intercept,
        stderr_hurst: main.fit.stderr_hurst,
        r_squared: main.fit.r_squared,
        indicators,
        garch_converged,
        generalized: results
            .iter()
            .filter(|m| m.fit.q != 2.0)
            .map(|m| (m.fit.q, m.fit.hurst))
            .collect(),
    })
}

/// Runs every window on the current rayon pool.
pub fn roll(returns: &ReturnSeries, config: &RollingConfig) -> Result<Vec<WindowResult>, RollingError> {
    run(returns, config, None)
}

/// Like [`roll`] on a dedicated pool of `workers` threads, reporting
/// `(finished, total)` after each window. Output does not depend on the
/// worker count.
pub fn roll_with(
    returns: &ReturnSeries,
    config: &RollingConfig,
    workers: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Vec<WindowResult>, RollingError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RollingError::Pool(e.to_string()))?;
    pool.install(|| run(returns, config, Some(progress)))
}

fn run(
    returns: &ReturnSeries,
    config: &RollingConfig,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<Vec<WindowResult>, RollingError> {
    config.validate()?;
    let n = returns.len();
    if n < config.window {
        return Err(RollingError::TooShort {
            got: n,
            window: config.window,
        });
    }
    let options = GarchOptions {
        demean: config.demean,
        ..GarchOptions::default()
    };
    let (series, whole_converged) = match config.garch_mode {
        GarchMode::WholeSample => {
            let fit = garch::fit(returns.values(), &options)?;
            (garch::standardize(returns.values(), &fit)?, fit.converged)
        }
        GarchMode::PerWindow | GarchMode::None => (returns.values().to_vec(), true),
    };

    let total = config.window_count(n);
    let done = AtomicUsize::new(0);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let start = k * config.step;
            let end = start + config.window;
            let date = returns.dates()[match config.date_anchor {
                DateAnchor::Start => start,
                DateAnchor::Center => start + config.window / 2,
                DateAnchor::End => end - 1,
            }];
            let raw = &series[start..end];
            let result = match config.garch_mode {
                GarchMode::PerWindow => match garch::fit(raw, &options) {
                    Ok(fit) => {
                        let filtered = garch::standardize(raw, &fit)?;
                        analyze_window(&filtered, date, config, fit.converged)
                    }
                    Err(_) => analyze_window(raw, date, config, false),
                },
                _ => analyze_window(raw, date, config, whole_converged),
            };
            if let Some(report) = progress {
                report(done.fetch_add(1, Ordering::Relaxed) + 1, total);
            }
            result
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRun {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub label: Regime,
    pub windows: usize,
}

/// Maximal runs of consecutive windows with `hurst < threshold` ("below")
/// or not ("above").
pub fn detect_regimes(results: &[WindowResult], threshold: f64) -> Result<Vec<RegimeRun>, RollingError> {
    if results.is_empty() {
        return Err(RollingError::Empty);
    }
    let mut runs: Vec<RegimeRun> = Vec::new();
    for r in results {
        let label = if r.hurst < threshold {
            Regime::Below
        } else {
            Regime::Above
        };
        match runs.last_mut() {
            Some(run) if run.label == label => {
                run.end = r.date;
                run.windows += 1;
            }
            _ => runs.push(RegimeRun {
                start: r.date,
                end: r.date,
                label,
                windows: 1,
            }),
        }
    }
    Ok(runs)
}

const BASE_COLUMNS: [&str; 9] = [
    "date",
    "hurst",
    "stderr_hurst",
    "r_squared",
    "f0",
    "f_sigma",
    "f_range",
    "f_ratio",
    "garch_converged",
];

fn q_column(q: f64) -> String {
    format!("hurst_q{q}")
}

/// One row per window. Columns beyond `garch_converged` appear only when
/// moment orders other than 2 were requested.
pub fn write_csv<W: Write>(writer: W, results: &[WindowResult]) -> Result<(), RollingError> {
    let mut w = csv::Writer::from_writer(writer);
    let extra: Vec<f64> = results
        .first()
        .map(|r| r.generalized.iter().map(|(q, _)| *q).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(extra.iter().map(|q| q_column(*q)));
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![
            r.date.format("%Y-%m-%d").to_string(),
            r.hurst.to_string(),
            r.stderr_hurst.to_string(),
            r.r_squared.to_string(),
            r.indicators.f0.to_string(),
            r.indicators.f_sigma.to_string(),
            r.indicators.f_range.to_string(),
            r.indicators.f_ratio.to_string(),
            r.garch_converged.to_string(),
        ];
        row.extend(r.generalized.iter().map(|(_, h)| h.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonRow<'a> {
    date: String,
    hurst: f64,
    stderr_hurst: f64,
    r_squared: f64,
    f0: f64,
    f_sigma: f64,
    f_range: f64,
    f_ratio: f64,
    garch_converged: bool,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    generalized_hurst: &'a [(f64, f64)],
}

/// Same fields as [`write_csv`], one JSON object per line.
pub fn write_jsonl<W: Write>(mut writer: W, results: &[WindowResult]) -> Result<(), RollingError> {
    for r in results {
        let row = JsonRow {
            date: r.date.format("%Y-%m-%d").to_string(),
            hurst: r.hurst,
            stderr_hurst: r.stderr_hurst,
            r_squared: r.r_squared,
            f0: r.indicators.f0,
            f_sigma: r.indicators.f_sigma,
            f_range: r.indicators.f_range,
            f_ratio: r.indicators.f_ratio,
            garch_converged: r.garch_converged,
            generalized_hurst: &r.generalized,
        };
        serde_json::to_writer(&mut writer, &row).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Parses a file produced by [`write_csv`]. `log_intercept` is recovered as
/// `ln f0`.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<WindowResult>, RollingError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let malformed = |line: u64, message: String| RollingError::Malformed { line, message };
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(BASE_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| malformed(1, format!("missing column `{name}`")))?;
    }
    let mut extra = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(q) = h.strip_prefix("hurst_q") {
            let q: f64 = q
                .parse()
                .map_err(|_| malformed(1, format!("bad moment column `{h}`")))?;
            extra.push((i, q));
        }
    }

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize| -> Result<f64, RollingError> {
            let raw = record.get(i).unwrap_or("");
            raw.parse()
                .map_err(|_| malformed(line, format!("cannot parse `{raw}` as a number")))
        };
        let raw_date = record.get(idx[0]).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
            .map_err(|_| malformed(line, format!("bad date `{raw_date}`")))?;
        let raw_flag = record.get(idx[8]).unwrap_or("");
        let garch_converged = raw_flag
            .parse()
            .map_err(|_| malformed(line, format!("bad flag `{raw_flag}`")))?;
        let f0 = num(idx[4])?;
        out.push(WindowResult {
            date,
            hurst: num(idx[1])?,
            log_intercept: f0.ln(),
            stderr_hurst: num(idx[2])?,
            r_squared: num(idx[3])?,
            indicators: LiquidityIndicators {
                f0,
                f_sigma: num(idx[5])?,
                f_range: num(idx[6])?,
                f_ratio: num(idx[7])?,
            },
            garch_converged,
            generalized: extra
                .iter()
                .map(|&(i, q)| Ok((q, num(i)?)))
                .collect::<Result<_, RollingError>>()?,
        });
    }
    Ok(out)
}
