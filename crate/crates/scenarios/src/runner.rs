//! Batch execution of a scenario.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bubblesim::{Axis, FaceField, SimError, Simulation, SparseSymMatrix, SubstepRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::output::{write_matrix, write_pgm, write_vector, DiagnosticsRow, TimingRow};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation setup failed: {0}")]
    Setup(SimError),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Csv(#[from] csv::Error),
    #[error("output error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Random initial velocity of amplitude `cfg.perturbation`, drawn from the
/// config seed.
pub fn initial_velocity(cfg: &ScenarioConfig) -> Result<Option<FaceField>, ConfigError> {
    if cfg.perturbation == 0.0 {
        return Ok(None);
    }
    let spec = cfg.grid_spec()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v = FaceField::new(&spec, 0.0);
    for axis in [Axis::X, Axis::Y] {
        for x in v.component_mut(axis).data_mut() {
            *x = rng.gen_range(-cfg.perturbation..=cfg.perturbation);
        }
    }
    Ok(Some(v))
}

pub fn build_simulation(cfg: &ScenarioConfig) -> Result<Simulation, RunError> {
    cfg.validate()?;
    let settings = cfg.settings()?;
    Simulation::new(
        settings,
        cfg.solid_scene(),
        &cfg.liquid_scene(),
        initial_velocity(cfg)?,
    )
    .map_err(RunError::Setup)
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub bubbles_enabled: bool,
    pub frames_requested: usize,
    pub frames_completed: usize,
    pub substeps: usize,
    pub wall_time: f64,
    pub mean_cg_iterations: f64,
    pub mean_assembly_time: f64,
    pub mean_solve_time: f64,
    pub max_constraint_flux: f64,
    pub final_bubble_volumes: Vec<f64>,
    pub final_liquid_volume: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub records: Vec<SubstepRecord>,
}

impl RunOutcome {
    /// Process exit status: zero on success, two after a solver abort.
    pub fn exit_code(&self) -> i32 {
        if self.summary.error.is_some() {
            2
        } else {
            0
        }
    }
}

fn summarize(
    cfg: &ScenarioConfig,
    frames: usize,
    done: usize,
    records: &[SubstepRecord],
    wall: f64,
) -> RunSummary {
    let n = records.len().max(1) as f64;
    let last = records.last();
    RunSummary {
        scenario: cfg.name.clone(),
        bubbles_enabled: cfg.bubbles_enabled,
        frames_requested: frames,
        frames_completed: done,
        substeps: records.len(),
        wall_time: wall,
        mean_cg_iterations: records.iter().map(|r| r.cg_iterations as f64).sum::<f64>() / n,
        mean_assembly_time: records.iter().map(|r| r.assembly_time).sum::<f64>() / n,
        mean_solve_time: records.iter().map(|r| r.solve_time).sum::<f64>() / n,
        max_constraint_flux: records
            .iter()
            .fold(0.0, |m, r| m.max(r.max_constraint_flux)),
        final_bubble_volumes: last.map(|r| r.bubble_volumes.clone()).unwrap_or_default(),
        final_liquid_volume: last.map(|r| r.liquid_volume).unwrap_or(0.0),
        error: None,
    }
}

struct Writers {
    dir: PathBuf,
    diagnostics: csv::Writer<fs::File>,
    timings: csv::Writer<fs::File>,
}

impl Writers {
    fn open(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            diagnostics: csv::Writer::from_path(dir.join("diagnostics.csv"))?,
            timings: csv::Writer::from_path(dir.join("timings.csv"))?,
        })
    }

    fn rows(&mut self, records: &[SubstepRecord]) -> Result<(), RunError> {
        for r in records {
            self.diagnostics.serialize(DiagnosticsRow::from(r))?;
            self.timings.serialize(TimingRow::from(r))?;
        }
        self.diagnostics.flush()?;
        self.timings.flush()?;
        Ok(())
    }
}

/// Runs `frames` frames (the config's count when `None`). With an output
/// directory, writes `diagnostics.csv`, `timings.csv`, `summary.json`,
/// material images and, if enabled, matrix dumps. A solver failure stops the
/// run and is reported in the summary rather than as an error.
pub fn run(
    cfg: &ScenarioConfig,
    frames: Option<usize>,
    out_dir: Option<&Path>,
) -> Result<RunOutcome, RunError> {
    run_with(cfg, frames, out_dir, |_, _| {})
}

/// Like [`run`], calling `observe(frame, &sim)` after every completed frame.
pub fn run_with(
    cfg: &ScenarioConfig,
    frames: Option<usize>,
    out_dir: Option<&Path>,
    mut observe: impl FnMut(usize, &Simulation),
) -> Result<RunOutcome, RunError> {
    let frames = frames.unwrap_or(cfg.physics.n_frames);
    let mut sim = build_simulation(cfg)?;
    let mut writers = out_dir.map(Writers::open).transpose()?;
    let start = Instant::now();
    let mut records = Vec::new();
    let mut done = 0;
    let mut error = None;
    let stride = cfg.output.frame_stride;
    for frame in 0..frames {
        let mut dumps: Vec<(usize, SparseSymMatrix, Vec<f64>)> = Vec::new();
        let dump = cfg.output.dump_matrix && writers.is_some();
        let result = sim.step_frame_with(|sub, sys| {
            if dump {
                dumps.push((sub, sys.matrix.clone(), sys.rhs.clone()));
            }
        });
        if let Some(w) = writers.as_mut() {
            for (sub, a, b) in &dumps {
                write_matrix(&w.dir.join(format!("matrix_{frame:05}_{sub:02}.mtx")), a)?;
                write_vector(&w.dir.join(format!("rhs_{frame:05}_{sub:02}.mtx")), b)?;
            }
        }
        match result {
            Ok(stats) => {
                if let Some(w) = writers.as_mut() {
                    w.rows(&stats.substeps)?;
                    if stride > 0 && frame % stride == 0 {
                        let labels = sim.labels();
                        let path = w.dir.join(format!("frame_{frame:05}.pgm"));
                        write_pgm(&path, sim.spec(), &labels, &sim.state.phi_liquid.phi)?;
                    }
                }
                records.extend(stats.substeps);
                done += 1;
                observe(frame, &sim);
            }
            Err(e) => {
                log::error!("frame {frame}: {e}");
                if let (Some(w), Some(sys)) = (writers.as_ref(), sim.failed_system.as_ref()) {
                    write_matrix(&w.dir.join("failed_matrix.mtx"), &sys.matrix)?;
                    write_vector(&w.dir.join("failed_rhs.mtx"), &sys.rhs)?;
                }
                error = Some(format!("frame {frame}: {e}"));
                break;
            }
        }
    }
    let mut summary = summarize(cfg, frames, done, &records, start.elapsed().as_secs_f64());
    summary.error = error;
    if let Some(w) = writers.as_ref() {
        let f = fs::File::create(w.dir.join("summary.json"))?;
        serde_json::to_writer_pretty(f, &summary)?;
    }
    Ok(RunOutcome { summary, records })
}
