//! File writers: diagnostics tables, material images and matrix dumps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bubblesim::{Field2, GridSpec, Material, SparseSymMatrix, SubstepRecord};
use serde::Serialize;

/// One substep in `diagnostics.csv`. Wall-clock measurements live in
/// `timings.csv` so this file is reproducible byte for byte.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsRow {
    pub frame: usize,
    pub substep: usize,
    pub t: f64,
    pub dt: f64,
    pub stretched: bool,
    pub n_bubbles: usize,
    pub n_active_constraints: usize,
    /// Semicolon-separated volumes indexed by bubble id.
    pub bubble_volumes: String,
    pub liquid_volume: f64,
    pub cg_iterations: usize,
    pub relative_residual: f64,
    pub u_star_max: f64,
    pub max_speed: f64,
    pub max_divergence: f64,
    pub max_constraint_flux: f64,
    pub solid_flux: f64,
    pub liquid_flux: f64,
    pub volume_source: f64,
}

impl From<&SubstepRecord> for DiagnosticsRow {
    fn from(r: &SubstepRecord) -> Self {
        Self {
            frame: r.frame,
            substep: r.substep,
            t: r.t,
            dt: r.dt,
            stretched: r.stretched,
            n_bubbles: r.n_bubbles,
            n_active_constraints: r.n_active,
            bubble_volumes: r
                .bubble_volumes
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            liquid_volume: r.liquid_volume,
            cg_iterations: r.cg_iterations,
            relative_residual: r.relative_residual,
            u_star_max: r.u_star_max,
            max_speed: r.max_speed,
            max_divergence: r.max_divergence,
            max_constraint_flux: r.max_constraint_flux,
            solid_flux: r.solid_flux(),
            liquid_flux: r.liquid_flux(),
            volume_source: r.volume_source,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TimingRow {
    pub frame: usize,
    pub substep: usize,
    pub assembly_time: f64,
    pub solve_time: f64,
}

impl From<&SubstepRecord> for TimingRow {
    fn from(r: &SubstepRecord) -> Self {
        Self {
            frame: r.frame,
            substep: r.substep,
            assembly_time: r.assembly_time,
            solve_time: r.solve_time,
        }
    }
}

/// Gray level of a cell: solid black, air white, liquid darker with depth.
pub fn material_shade(m: Material, phi: f64, dx: f64) -> u8 {
    match m {
        Material::Solid => 0,
        Material::Air => 255,
        Material::Liquid => {
            let depth = (-phi / (8.0 * dx)).clamp(0.0, 1.0);
            (128.0 - 64.0 * depth).round() as u8
        }
    }
}

/// Binary PGM of the material map, top row first.
pub fn write_pgm(
    path: &Path,
    spec: &GridSpec,
    labels: &[Material],
    phi: &Field2,
) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", spec.nx, spec.ny)?;
    let mut row = vec![0u8; spec.nx];
    for j in (0..spec.ny).rev() {
        for (i, px) in row.iter_mut().enumerate() {
            let c = spec.cell_index(i, j);
            *px = material_shade(labels[c], phi[(i, j)], spec.dx);
        }
        out.write_all(&row)?;
    }
    out.flush()
}

pub fn write_matrix(path: &Path, a: &SparseSymMatrix) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    a.write_matrix_market(&mut out)?;
    out.flush()
}

pub fn write_vector(path: &Path, v: &[f64]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} 1", v.len())?;
    for x in v {
        writeln!(out, "{x:e}")?;
    }
    out.flush()
}
