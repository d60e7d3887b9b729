use std::path::PathBuf;

use serde::Serialize;
use varscale::{GeneratorSpec, RollingConfig};

/// Record of one invocation, written next to its outputs. Re-running `argv`
/// reproduces every output except the manifest's own timing.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub inputs: Vec<PathBuf>,
    pub config: Option<RollingConfig>,
    pub generator: Option<GeneratorSpec>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().collect(),
            inputs: Vec::new(),
            config: None,
            generator: None,
            seeds: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }
}
