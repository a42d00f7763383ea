//! Constrained pressure projection.
//!
//! Unknowns are the pressures of liquid cells plus one multiplier per
//! constrained bubble. Eliminating the (diagonal) face mass block from the
//! saddle-point system leaves a symmetric positive definite system whose
//! bubble rows behave like a single "super cell" spanning the whole bubble:
//! every liquid face of the bubble couples its liquid cell to the bubble's
//! multiplier with the same ghost-fluid coefficient a free surface would
//! use, and the multiplier then plays the role of the bubble's uniform
//! pressure.
//!
//! Sign conventions: `rhs` of a pressure row is minus the divergence of the
//! intermediate velocity (outward flux positive), and the same holds for a
//! bubble row with the bubble treated as one cell.

use std::time::Instant;

use thiserror::Error;

use crate::faces::{FaceGeometry, OpenSides};
use crate::grid::{FaceField, FaceIndex, FaceMask, Field2, GridSpec};
use crate::krylov::{cg_solve, CgSettings, SolveReport, SolverError, SparseSymMatrix, SymBuilder};
use crate::levelset::{face_curvature, Material};
use crate::regions::MaterialMap;
use crate::SimError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicsParams {
    pub rho: f64,
    pub gravity: [f64; 2],
    pub sigma: f64,
    pub dt: f64,
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(SimError::Config(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(SimError::Config(format!(
                "sigma must be non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// What lies across a liquid face from its liquid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ghost {
    Bubble(usize),
    /// Outside an open domain side.
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    LiquidLiquid {
        minus: usize,
        plus: usize,
    },
    /// Liquid cell on one side, pressure boundary value on the other.
    LiquidGhost {
        liquid: usize,
        liquid_on_minus: bool,
        ghost: Ghost,
    },
    /// No pressure coupling: solid, air-air, or air against the boundary.
    Uncoupled,
}

pub fn classify_face(
    spec: &GridSpec,
    map: &MaterialMap,
    geom: &FaceGeometry,
    open: OpenSides,
    face: FaceIndex,
) -> FaceKind {
    if geom.w.get(face) <= 0.0 {
        return FaceKind::Uncoupled;
    }
    let labels = &map.labels;
    match spec.face_cells(face) {
        (Some(a), Some(b)) => match (labels[a], labels[b]) {
            (Material::Liquid, Material::Liquid) => FaceKind::LiquidLiquid { minus: a, plus: b },
            (Material::Liquid, Material::Air) => FaceKind::LiquidGhost {
                liquid: a,
                liquid_on_minus: true,
                ghost: Ghost::Bubble(map.bubble_id[b].expect("air cell without bubble id")),
            },
            (Material::Air, Material::Liquid) => FaceKind::LiquidGhost {
                liquid: b,
                liquid_on_minus: false,
                ghost: Ghost::Bubble(map.bubble_id[a].expect("air cell without bubble id")),
            },
            _ => FaceKind::Uncoupled,
        },
        (Some(c), None) | (None, Some(c)) => {
            if labels[c] == Material::Liquid && open.is_open(spec, face) {
                FaceKind::LiquidGhost {
                    liquid: c,
                    liquid_on_minus: spec.face_cells(face).0.is_some(),
                    ghost: Ghost::Exterior,
                }
            } else {
                FaceKind::Uncoupled
            }
        }
        (None, None) => FaceKind::Uncoupled,
    }
}

/// Surface-tension pressure jump `sigma * kappa` on every liquid-air face,
/// zero elsewhere.
pub fn surface_tension_jumps(
    spec: &GridSpec,
    map: &MaterialMap,
    geom: &FaceGeometry,
    phi_liquid: &Field2,
    sigma: f64,
) -> FaceField {
    let mut jumps = FaceField::new(spec, 0.0);
    if sigma == 0.0 {
        return jumps;
    }
    for face in spec.faces() {
        if let (Some(a), Some(b)) = spec.face_cells(face) {
            let (liq, air) = match (map.labels[a], map.labels[b]) {
                (Material::Liquid, Material::Air) => (a, b),
                (Material::Air, Material::Liquid) => (b, a),
                _ => continue,
            };
            let k = face_curvature(
                phi_liquid,
                spec.cell_coords(liq),
                spec.cell_coords(air),
                geom.theta.get(face),
                spec.dx,
            );
            jumps.set(face, sigma * k);
        }
    }
    jumps
}

/// Everything the projection needs for one substep.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionProblem<'a> {
    pub spec: &'a GridSpec,
    /// Intermediate (post-advection, post-force) velocities.
    pub u_star: &'a FaceField,
    pub map: &'a MaterialMap,
    pub geom: &'a FaceGeometry,
    /// Ghost pressure jump per liquid-air face.
    pub jumps: &'a FaceField,
    pub params: PhysicsParams,
    pub open: OpenSides,
    /// Uniform divergence source added to every liquid cell.
    pub source: f64,
}

impl ProjectionProblem<'_> {
    fn kind(&self, face: FaceIndex) -> FaceKind {
        classify_face(self.spec, self.map, self.geom, self.open, face)
    }

    /// Velocity flux density across a face, combining the fluid part with
    /// the solid part.
    fn face_flux(&self, velocity: &FaceField, face: FaceIndex) -> f64 {
        let w = self.geom.w.get(face);
        w * velocity.get(face) + (1.0 - w) * self.geom.solid_u.get(face)
    }
}

/// Maps grid cells and bubbles to rows of the reduced system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemIndex {
    pub cell_row: Vec<Option<usize>>,
    pub bubble_row: Vec<Option<usize>>,
    pub n_pressure: usize,
    pub n_multiplier: usize,
}

impl SystemIndex {
    pub fn dim(&self) -> usize {
        self.n_pressure + self.n_multiplier
    }
}

#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub matrix: SparseSymMatrix,
    pub rhs: Vec<f64>,
    pub index: SystemIndex,
    /// Bubbles whose constraint is enforced in this system.
    pub active: Vec<bool>,
}

/// Constrained bubbles that touch no liquid face would give an empty row;
/// they are left unconstrained.
pub fn effective_active(problem: &ProjectionProblem) -> Vec<bool> {
    let map = problem.map;
    let mut has_liquid = vec![false; map.n_bubbles];
    for face in problem.spec.faces() {
        if let FaceKind::LiquidGhost {
            ghost: Ghost::Bubble(id),
            ..
        } = problem.kind(face)
        {
            has_liquid[id] = true;
        }
    }
    map.active
        .iter()
        .enumerate()
        .map(|(id, &a)| {
            if a && !has_liquid[id] {
                log::warn!("bubble {id} has no liquid faces; constraint dropped");
            }
            a && has_liquid[id]
        })
        .collect()
}

pub fn build_index(map: &MaterialMap, active: &[bool]) -> SystemIndex {
    let mut cell_row = vec![None; map.labels.len()];
    let mut n = 0;
    for (c, m) in map.labels.iter().enumerate() {
        if *m == Material::Liquid {
            cell_row[c] = Some(n);
            n += 1;
        }
    }
    let n_pressure = n;
    let bubble_row = active
        .iter()
        .map(|&a| {
            a.then(|| {
                n += 1;
                n - 1
            })
        })
        .collect();
    SystemIndex {
        cell_row,
        bubble_row,
        n_pressure,
        n_multiplier: n - n_pressure,
    }
}

/// Assembles the reduced symmetric system over liquid pressures and
/// constrained-bubble multipliers.
pub fn assemble_reduced_system(problem: &ProjectionProblem) -> ReducedSystem {
    let spec = problem.spec;
    let map = problem.map;
    let PhysicsParams { rho, dt, .. } = problem.params;
    let dx = spec.dx;
    let scale = dt / (rho * dx * dx);

    let active = effective_active(problem);
    let index = build_index(map, &active);
    let mut builder = SymBuilder::new(index.dim());
    let mut rhs = vec![0.0; index.dim()];

    for face in spec.faces() {
        match problem.kind(face) {
            FaceKind::LiquidLiquid { minus, plus } => {
                let c = scale * problem.geom.w.get(face);
                let (a, b) = (
                    index.cell_row[minus].unwrap(),
                    index.cell_row[plus].unwrap(),
                );
                builder.add_diag(a, c);
                builder.add_diag(b, c);
                builder.add_sym(a, b, -c);
            }
            FaceKind::LiquidGhost { liquid, ghost, .. } => {
                let g = scale * problem.geom.w.get(face) / problem.geom.theta.get(face);
                let a = index.cell_row[liquid].unwrap();
                builder.add_diag(a, g);
                let jump = match ghost {
                    Ghost::Bubble(_) => problem.jumps.get(face),
                    Ghost::Exterior => 0.0,
                };
                rhs[a] += g * jump;
                if let Ghost::Bubble(id) = ghost {
                    if let Some(l) = index.bubble_row[id] {
                        builder.add_diag(l, g);
                        builder.add_sym(a, l, -g);
                        rhs[l] -= g * jump;
                    }
                }
            }
            FaceKind::Uncoupled => {}
        }
    }

    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let c = spec.cell_index(i, j);
            let row = match map.labels[c] {
                Material::Liquid => index.cell_row[c],
                Material::Air => map.bubble_id[c].and_then(|id| index.bubble_row[id]),
                Material::Solid => None,
            };
            let Some(row) = row else { continue };
            for (face, sign) in spec.cell_faces(i, j) {
                if map.labels[c] == Material::Air && is_internal_bubble_face(spec, map, c, face) {
                    continue;
                }
                rhs[row] -= sign * problem.face_flux(problem.u_star, face) / dx;
            }
            if map.labels[c] == Material::Liquid {
                rhs[row] += problem.source;
            }
        }
    }

    ReducedSystem {
        matrix: builder.build(),
        rhs,
        index,
        active,
    }
}

/// Faces between two air cells of the same bubble carry no net flux for
/// that bubble.
fn is_internal_bubble_face(
    spec: &GridSpec,
    map: &MaterialMap,
    cell: usize,
    face: FaceIndex,
) -> bool {
    let (a, b) = spec.face_cells(face);
    let other = if a == Some(cell) { b } else { a };
    match other {
        Some(o) => map.labels[o] == Material::Air && map.bubble_id[o] == map.bubble_id[cell],
        None => false,
    }
}

/// Projected velocities and the mask of faces that carry meaningful values.
#[derive(Clone, Debug)]
pub struct Projected {
    pub velocity: FaceField,
    pub valid: FaceMask,
}

/// Recovers face velocities from a solution of the reduced system.
pub fn apply_pressure_gradient(
    problem: &ProjectionProblem,
    system: &ReducedSystem,
    solution: &[f64],
) -> Result<Projected, SimError> {
    if solution.len() != system.index.dim() {
        return Err(SimError::Internal(format!(
            "solution has {} entries, system has {}",
            solution.len(),
            system.index.dim()
        )));
    }
    let spec = problem.spec;
    let PhysicsParams { rho, dt, .. } = problem.params;
    let k = dt / (rho * spec.dx);
    let index = &system.index;
    let pressure = |cell: usize| -> Result<f64, SimError> {
        index.cell_row[cell]
            .map(|r| solution[r])
            .ok_or_else(|| SimError::Internal(format!("no pressure row for cell {cell}")))
    };

    let mut velocity = problem.u_star.clone();
    let mut valid = FaceMask::new(spec, false);
    for face in spec.faces() {
        if problem.geom.w.get(face) <= 0.0 {
            velocity.set(face, problem.geom.solid_u.get(face));
            valid.set(face, true);
            continue;
        }
        match problem.kind(face) {
            FaceKind::LiquidLiquid { minus, plus } => {
                let du = k * (pressure(plus)? - pressure(minus)?);
                velocity.set(face, problem.u_star.get(face) - du);
                valid.set(face, true);
            }
            FaceKind::LiquidGhost {
                liquid,
                liquid_on_minus,
                ghost,
            } => {
                let p_ghost = match ghost {
                    Ghost::Bubble(id) => {
                        index.bubble_row[id].map(|r| solution[r]).unwrap_or(0.0)
                            + problem.jumps.get(face)
                    }
                    Ghost::Exterior => 0.0,
                };
                let p_liq = pressure(liquid)?;
                let diff = if liquid_on_minus {
                    p_ghost - p_liq
                } else {
                    p_liq - p_ghost
                };
                let theta = problem.geom.theta.get(face);
                velocity.set(face, problem.u_star.get(face) - k / theta * diff);
                valid.set(face, true);
            }
            FaceKind::Uncoupled => {}
        }
    }
    Ok(Projected { velocity, valid })
}

/// Net flux through the boundary of one constrained bubble, split into the
/// liquid-face part and the solid-face part (area times normal velocity,
/// outward positive).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleFlux {
    pub bubble: usize,
    pub liquid: f64,
    pub solid: f64,
}

impl BubbleFlux {
    pub fn net(&self) -> f64 {
        self.liquid + self.solid
    }
}

pub fn bubble_fluxes(
    problem: &ProjectionProblem,
    active: &[bool],
    velocity: &FaceField,
) -> Vec<BubbleFlux> {
    let spec = problem.spec;
    let map = problem.map;
    let dx = spec.dx;
    let mut out: Vec<BubbleFlux> = active
        .iter()
        .enumerate()
        .filter(|(_, a)| **a)
        .map(|(bubble, _)| BubbleFlux {
            bubble,
            liquid: 0.0,
            solid: 0.0,
        })
        .collect();
    let mut slot = vec![None; map.n_bubbles];
    for (k, f) in out.iter().enumerate() {
        slot[f.bubble] = Some(k);
    }
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let c = spec.cell_index(i, j);
            let Some(k) = map.bubble_id[c].and_then(|id| slot[id]) else {
                continue;
            };
            for (face, sign) in spec.cell_faces(i, j) {
                if is_internal_bubble_face(spec, map, c, face) {
                    continue;
                }
                let w = problem.geom.w.get(face);
                out[k].liquid += sign * dx * w * velocity.get(face);
                out[k].solid += sign * dx * (1.0 - w) * problem.geom.solid_u.get(face);
            }
        }
    }
    out
}

/// Divergence of every liquid cell minus the requested source, indexed by
/// cell (zero for non-liquid cells).
pub fn liquid_divergence(problem: &ProjectionProblem, velocity: &FaceField) -> Vec<f64> {
    let spec = problem.spec;
    let mut div = vec![0.0; spec.n_cells()];
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let c = spec.cell_index(i, j);
            if problem.map.labels[c] != Material::Liquid {
                continue;
            }
            let mut d = 0.0;
            for (face, sign) in spec.cell_faces(i, j) {
                d += sign * problem.face_flux(velocity, face);
            }
            div[c] = d / spec.dx - problem.source;
        }
    }
    div
}

#[derive(Debug, Error)]
#[error("pressure solve failed: {0}")]
pub struct ProjectionError(#[from] pub SolverError);

/// Result of one full projection.
#[derive(Clone, Debug)]
pub struct ProjectionOutcome {
    pub projected: Projected,
    pub system: ReducedSystem,
    pub solution: Vec<f64>,
    pub report: SolveReport,
    pub assembly_time: f64,
    pub solve_time: f64,
}

/// Assemble, solve and apply.
pub fn project(
    problem: &ProjectionProblem,
    settings: &CgSettings,
) -> Result<ProjectionOutcome, SimError> {
    let t0 = Instant::now();
    let system = assemble_reduced_system(problem);
    let assembly_time = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (solution, report) = cg_solve(&system.matrix, &system.rhs, settings)?;
    let solve_time = t1.elapsed().as_secs_f64();
    let projected = apply_pressure_gradient(problem, &system, &solution)?;
    Ok(ProjectionOutcome {
        projected,
        system,
        solution,
        report,
        assembly_time,
        solve_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_problem_parts(
        labels: Vec<Material>,
        phi: Vec<f64>,
        nx: usize,
    ) -> (GridSpec, MaterialMap, FaceGeometry) {
        let spec = GridSpec::new(nx, 3, 1.0, [0.0, 0.0]).unwrap();
        let phi = Field2::from_fn(nx, 3, |i, _| phi[i]);
        let mut full = Vec::new();
        for _ in 0..3 {
            full.extend_from_slice(&labels);
        }
        let geom = FaceGeometry::unobstructed(&spec, &full, &phi, OpenSides::closed());
        let map = MaterialMap::new(spec, full, &geom);
        (spec, map, geom)
    }

    fn params() -> PhysicsParams {
        PhysicsParams {
            rho: 1.0,
            gravity: [0.0, 0.0],
            sigma: 0.0,
            dt: 1.0,
        }
    }

    #[test]
    fn closed_liquid_column_is_graph_laplacian() {
        let (spec, map, geom) = column_problem_parts(vec![Material::Liquid; 3], vec![-1.0; 3], 3);
        let u = FaceField::new(&spec, 0.0);
        let jumps = FaceField::new(&spec, 0.0);
        let p = ProjectionProblem {
            spec: &spec,
            u_star: &u,
            map: &map,
            geom: &geom,
            jumps: &jumps,
            params: params(),
            open: OpenSides::closed(),
            source: 0.0,
        };
        let sys = assemble_reduced_system(&p);
        assert!(sys.rhs.iter().all(|v| *v == 0.0));
        // middle row of the 3x3 block: neighbors left, right, up and down
        let mid = sys.index.cell_row[spec.cell_index(1, 1)].unwrap();
        assert_eq!(sys.matrix.get(mid, mid), 4.0);
        let corner = sys.index.cell_row[spec.cell_index(0, 0)].unwrap();
        assert_eq!(sys.matrix.get(corner, corner), 2.0);
        let row_sum: f64 = sys.matrix.row(mid).map(|(_, v)| v).sum();
        assert_eq!(row_sum, 0.0);
    }

    #[test]
    fn ghost_face_boosts_diagonal() {
        // one liquid cell next to free-surface air with theta = 1/2
        let spec = GridSpec::new(3, 3, 1.0, [0.0, 0.0]).unwrap();
        let mut labels = vec![Material::Solid; 9];
        labels[spec.cell_index(0, 1)] = Material::Liquid;
        labels[spec.cell_index(1, 1)] = Material::Air;
        let phi = Field2::from_fn(3, 3, |i, _| if i == 0 { -0.5 } else { 0.5 });
        let nodes = Field2::new(4, 4, 1.0);
        let geom = FaceGeometry::build(&spec, &labels, &phi, &nodes, OpenSides::closed(), |_| 0.0);
        let mut map = MaterialMap::new(spec, labels, &geom);
        map.deactivate_all();
        let u = FaceField::new(&spec, 0.0);
        let jumps = FaceField::new(&spec, 0.0);
        let p = ProjectionProblem {
            spec: &spec,
            u_star: &u,
            map: &map,
            geom: &geom,
            jumps: &jumps,
            params: params(),
            open: OpenSides::closed(),
            source: 0.0,
        };
        let sys = assemble_reduced_system(&p);
        assert_eq!(sys.index.dim(), 1);
        // c = dt w / (rho dx^2) = 1, boosted to c / theta = 2
        assert_eq!(sys.matrix.get(0, 0), 2.0);
    }

    #[test]
    fn constant_pressure_leaves_interior_faces_unchanged() {
        let (spec, map, geom) = column_problem_parts(vec![Material::Liquid; 4], vec![-1.0; 4], 4);
        let u = FaceField::new(&spec, 0.3);
        let jumps = FaceField::new(&spec, 0.0);
        let p = ProjectionProblem {
            spec: &spec,
            u_star: &u,
            map: &map,
            geom: &geom,
            jumps: &jumps,
            params: params(),
            open: OpenSides::closed(),
            source: 0.0,
        };
        let sys = assemble_reduced_system(&p);
        let sol = vec![2.5; sys.index.dim()];
        let out = apply_pressure_gradient(&p, &sys, &sol).unwrap();
        assert_eq!(out.velocity.get(FaceIndex::x(2, 1)), 0.3);
        assert_eq!(out.velocity.get(FaceIndex::y(1, 1)), 0.3);
        // closed walls take the (static) solid velocity
        assert_eq!(out.velocity.get(FaceIndex::x(0, 1)), 0.0);
    }

    #[test]
    fn short_solution_is_an_error() {
        let (spec, map, geom) = column_problem_parts(vec![Material::Liquid; 3], vec![-1.0; 3], 3);
        let u = FaceField::new(&spec, 0.0);
        let jumps = FaceField::new(&spec, 0.0);
        let p = ProjectionProblem {
            spec: &spec,
            u_star: &u,
            map: &map,
            geom: &geom,
            jumps: &jumps,
            params: params(),
            open: OpenSides::closed(),
            source: 0.0,
        };
        let sys = assemble_reduced_system(&p);
        assert!(apply_pressure_gradient(&p, &sys, &[0.0]).is_err());
    }

    #[test]
    fn physics_validation() {
        assert!(params().validate().is_ok());
        assert!(PhysicsParams {
            rho: 0.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(PhysicsParams {
            sigma: -1.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(PhysicsParams {
            dt: 0.0,
            ..params()
        }
        .validate()
        .is_err());
    }
}
