//! Level sets, material classification and the per-face cut-cell / ghost
//! fluid fractions derived from them.

use crate::grid::{Field2, GridSpec};
use crate::SimError;

/// Smallest ghost-fluid liquid fraction.
pub const THETA_MIN: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    Liquid,
    Solid,
}

/// Cell-centered signed distance, negative inside the material.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSetField {
    pub phi: Field2,
    pub kind: SurfaceKind,
}

impl LevelSetField {
    pub fn new(phi: Field2, kind: SurfaceKind) -> Self {
        Self { phi, kind }
    }

    pub fn from_sdf(spec: &GridSpec, kind: SurfaceKind, sdf: impl Fn([f64; 2]) -> f64) -> Self {
        let phi = Field2::from_fn(spec.nx, spec.ny, |i, j| sdf(spec.cell_center(i, j)));
        Self { phi, kind }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Material {
    Liquid,
    Air,
    Solid,
}

/// Solid wins over liquid; anything else is air.
pub fn classify(phi_solid: f64, phi_liquid: f64) -> Material {
    if phi_solid < 0.0 {
        Material::Solid
    } else if phi_liquid < 0.0 {
        Material::Liquid
    } else {
        Material::Air
    }
}

pub fn classify_cells(
    phi_liquid: &LevelSetField,
    phi_solid: &LevelSetField,
) -> Result<Vec<Material>, SimError> {
    if phi_liquid.phi.shape() != phi_solid.phi.shape() {
        return Err(SimError::DimensionMismatch {
            what: "liquid and solid level sets",
            expected: phi_liquid.phi.data().len(),
            found: phi_solid.phi.data().len(),
        });
    }
    Ok(phi_solid
        .phi
        .data()
        .iter()
        .zip(phi_liquid.phi.data())
        .map(|(&s, &l)| classify(s, l))
        .collect())
}

/// Fraction of a face segment where the linear interpolant of the solid
/// distance at its two endpoints is non-negative.
pub fn face_fraction(a: f64, b: f64) -> f64 {
    match (a >= 0.0, b >= 0.0) {
        (true, true) => 1.0,
        (false, false) => 0.0,
        (true, false) => (a / (a - b)).clamp(0.0, 1.0),
        (false, true) => (b / (b - a)).clamp(0.0, 1.0),
    }
}

/// Ghost-fluid liquid fraction between a liquid cell and an air cell.
///
/// Inputs that violate `phi_liquid < 0 <= phi_air` mean the labels and the
/// level set disagree; the face is then treated as a full cell (`1`).
pub fn ghost_theta(phi_liquid: f64, phi_air: f64) -> f64 {
    if !(phi_liquid < 0.0 && phi_air >= 0.0) {
        log::debug!("ghost_theta precondition violated: ({phi_liquid}, {phi_air})");
        return 1.0;
    }
    (phi_liquid / (phi_liquid - phi_air)).clamp(THETA_MIN, 1.0)
}

/// Mean curvature `div(grad phi / |grad phi|)` at a cell center by central
/// differences. Edge cells reuse the stencil of their inward neighbor.
pub fn cell_curvature(phi: &Field2, i: usize, j: usize, dx: f64) -> f64 {
    let inward = |k: usize, n: usize| if n >= 3 { k.clamp(1, n - 2) } else { k };
    let (i, j) = (inward(i, phi.nx()) as isize, inward(j, phi.ny()) as isize);
    let p = |a: isize, b: isize| phi.clamped(a, b);
    let c = p(i, j);
    let px = (p(i + 1, j) - p(i - 1, j)) / (2.0 * dx);
    let py = (p(i, j + 1) - p(i, j - 1)) / (2.0 * dx);
    let pxx = (p(i + 1, j) - 2.0 * c + p(i - 1, j)) / (dx * dx);
    let pyy = (p(i, j + 1) - 2.0 * c + p(i, j - 1)) / (dx * dx);
    let pxy =
        (p(i + 1, j + 1) - p(i + 1, j - 1) - p(i - 1, j + 1) + p(i - 1, j - 1)) / (4.0 * dx * dx);
    let g2 = px * px + py * py;
    let g = g2.sqrt();
    if g < 1e-8 {
        return 0.0;
    }
    (pxx * py * py - 2.0 * px * py * pxy + pyy * px * px) / (g2 * g)
}

/// Curvature at the interface crossing of a liquid-air face: the two cell
/// curvatures interpolated at liquid fraction `theta`, clamped to `1/dx`.
pub fn face_curvature(
    phi: &Field2,
    liquid_cell: (usize, usize),
    air_cell: (usize, usize),
    theta: f64,
    dx: f64,
) -> f64 {
    let kl = cell_curvature(phi, liquid_cell.0, liquid_cell.1, dx);
    let ka = cell_curvature(phi, air_cell.0, air_cell.1, dx);
    let k = (1.0 - theta) * kl + theta * ka;
    k.clamp(-1.0 / dx, 1.0 / dx)
}

/// Smoothed cell occupancy of the negative region, `clamp(1/2 - phi/dx)`.
pub fn occupancy(phi: f64, dx: f64) -> f64 {
    (0.5 - phi / dx).clamp(0.0, 1.0)
}
