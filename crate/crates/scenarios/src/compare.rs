//! Paired runs with the bubble constraints switched on and off.

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::runner::{run, RunError};

pub const DEFAULT_COMPARE_FRAMES: usize = 10;

#[derive(Clone, Debug, Serialize)]
pub struct CompareSide {
    pub substeps: usize,
    /// Mean assembly plus solve time per substep, seconds.
    pub mean_projection_time: f64,
    pub mean_cg_iterations: f64,
    pub mean_active_constraints: f64,
    /// Sum over substeps of the solid-face flux into constrained bubbles.
    pub total_solid_flux: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub scenario: String,
    pub frames: usize,
    pub with_bubbles: CompareSide,
    pub without_bubbles: CompareSide,
    pub time_ratio: f64,
    pub iteration_ratio: f64,
}

fn side(cfg: &ScenarioConfig, frames: usize) -> Result<CompareSide, RunError> {
    let out = run(cfg, Some(frames), None)?;
    let r = &out.records;
    let n = r.len().max(1) as f64;
    Ok(CompareSide {
        substeps: r.len(),
        mean_projection_time: r
            .iter()
            .map(|s| s.assembly_time + s.solve_time)
            .sum::<f64>()
            / n,
        mean_cg_iterations: r.iter().map(|s| s.cg_iterations as f64).sum::<f64>() / n,
        mean_active_constraints: r.iter().map(|s| s.n_active as f64).sum::<f64>() / n,
        total_solid_flux: r.iter().map(|s| s.solid_flux()).sum(),
        error: out.summary.error,
    })
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

/// Runs the first `frames` frames twice, constraints first, and compares
/// the per-substep projection cost.
pub fn compare_mode(
    cfg: &ScenarioConfig,
    frames: Option<usize>,
) -> Result<CompareReport, RunError> {
    let frames = frames.unwrap_or(DEFAULT_COMPARE_FRAMES);
    let mut on = cfg.clone();
    on.bubbles_enabled = true;
    let mut off = cfg.clone();
    off.bubbles_enabled = false;
    let with_bubbles = side(&on, frames)?;
    let without_bubbles = side(&off, frames)?;
    Ok(CompareReport {
        scenario: cfg.name.clone(),
        frames,
        time_ratio: ratio(
            with_bubbles.mean_projection_time,
            without_bubbles.mean_projection_time,
        ),
        iteration_ratio: ratio(
            with_bubbles.mean_cg_iterations,
            without_bubbles.mean_cg_iterations,
        ),
        with_bubbles,
        without_bubbles,
    })
}
