//! Scenario files, built-in scenes, a batch runner and paired
//! with/without-constraint comparisons for `bubblesim`.

pub mod compare;
pub mod config;
pub mod metrics;
pub mod output;
pub mod presets;
pub mod runner;

use std::path::Path;

pub use compare::{compare_mode, CompareReport};
pub use config::{parse_config, ConfigError, ScenarioConfig};
pub use presets::{build_preset, PRESET_NAMES};
pub use runner::{build_simulation, run, run_with, RunError, RunOutcome, RunSummary};

/// Resolves `preset:NAME` or a path to a JSON config.
pub fn load_scenario(spec: &str) -> Result<ScenarioConfig, ConfigError> {
    match spec.strip_prefix("preset:") {
        Some(name) => build_preset(name),
        None => parse_config(Path::new(spec)),
    }
}
