//! Variance-scaling analysis of financial return series.
//!
//! The pipeline turns closing prices into log returns, standardizes them by
//! GARCH(1,1) conditional volatility, and runs multifractal detrended
//! fluctuation analysis over sliding windows. Each window yields a
//! generalized Hurst exponent and four measures of how evenly fluctuations
//! are spread across horizons (see [`liquidity`]).
//!
//! [`synth`] provides seeded generators with known scaling behaviour for
//! validating the estimators.

pub mod garch;
pub mod ingest;
pub mod liquidity;
pub mod optim;
pub mod rolling;
pub mod scaling;
pub mod synth;

use thiserror::Error;

pub use garch::{GarchFit, GarchOptions, GarchParams};
pub use ingest::{CsvLayout, PriceSeries, ReturnSeries};
pub use liquidity::LiquidityIndicators;
pub use rolling::{GarchMode, RollingConfig, WindowResult};
pub use scaling::{FluctuationProfile, ScalingFit};
pub use synth::GeneratorSpec;

/// Any error raised by the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Garch(#[from] garch::GarchError),
    #[error(transparent)]
    Scaling(#[from] scaling::ScalingError),
    #[error(transparent)]
    Liquidity(#[from] liquidity::LiquidityError),
    #[error(transparent)]
    Rolling(#[from] rolling::RollingError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
}

/// Broad cause of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input data, parameters or files.
    Input,
    /// A numerical procedure failed on otherwise valid input.
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use garch::GarchError as G;
        use rolling::RollingError as R;
        match self {
            Error::Garch(G::Evaluation(_)) => ErrorClass::Numerical,
            Error::Synth(synth::SynthError::Embedding { .. }) => ErrorClass::Numerical,
            Error::Rolling(R::Garch(G::Evaluation(_))) | Error::Rolling(R::Pool(_)) => ErrorClass::Numerical,
            _ => ErrorClass::Input,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
