//! Randomized small scenes and a dense saddle-point reference solver shared
//! by the integration tests.
#![allow(dead_code)]

use bubblesim::faces::{FaceGeometry, OpenSides};
use bubblesim::grid::{FaceField, FaceIndex, Field2, GridSpec};
use bubblesim::levelset::Material;
use bubblesim::projection::{classify_face, FaceKind, PhysicsParams, ProjectionProblem};
use bubblesim::regions::{find_enclosure_groups, prune_constraints, MaterialMap};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub struct RandomScene {
    pub spec: GridSpec,
    pub labels: Vec<Material>,
    pub phi: Field2,
    pub geom: FaceGeometry,
    pub map: MaterialMap,
    pub u_star: FaceField,
    pub jumps: FaceField,
    pub open: OpenSides,
    pub params: PhysicsParams,
    pub source: f64,
}

impl RandomScene {
    pub fn problem(&self) -> ProjectionProblem<'_> {
        ProjectionProblem {
            spec: &self.spec,
            u_star: &self.u_star,
            map: &self.map,
            geom: &self.geom,
            jumps: &self.jumps,
            params: self.params,
            open: self.open,
            source: self.source,
        }
    }
}

/// A scene of at most 8x8 cells with random labels, cut fractions, liquid
/// fractions, solid velocities, jumps and open sides. Constraints follow the
/// simulator's rule: bubbles on open sides are free, then pruning.
pub fn random_scene(rng: &mut impl Rng) -> RandomScene {
    let nx = rng.gen_range(3..=8);
    let ny = rng.gen_range(3..=8);
    let dx = rng.gen_range(0.05..0.5);
    let spec = GridSpec::new(nx, ny, dx, [0.0, 0.0]).unwrap();
    let labels: Vec<Material> = (0..nx * ny)
        .map(|_| match rng.gen_range(0.0..1.0) {
            x if x < 0.15 => Material::Solid,
            x if x < 0.65 => Material::Liquid,
            _ => Material::Air,
        })
        .collect();
    let phi = Field2::from_fn(nx, ny, |i, j| match labels[spec.cell_index(i, j)] {
        Material::Liquid => -rng.gen_range(0.01..1.0) * dx,
        _ => rng.gen_range(0.0..1.0) * dx,
    });
    let nodes = Field2::from_fn(nx + 1, ny + 1, |_, _| {
        if rng.gen_bool(0.8) {
            1.0
        } else {
            rng.gen_range(-0.5..0.5)
        }
    });
    let open = OpenSides {
        left: rng.gen_bool(0.3),
        right: rng.gen_bool(0.3),
        bottom: rng.gen_bool(0.3),
        top: rng.gen_bool(0.3),
    };
    let mut solid_u = FaceField::new(&spec, 0.0);
    for face in spec.faces() {
        solid_u.set(face, rng.gen_range(-1.0..1.0));
    }
    let geom = FaceGeometry::build(&spec, &labels, &phi, &nodes, open, |f| solid_u.get(f));
    let mut map = MaterialMap::new(spec, labels.clone(), &geom);
    let groups = find_enclosure_groups(&spec, &labels, &map.bubble_id, open);
    let free = map.bubbles_touching(open);
    map.active = prune_constraints(&map, &groups, &free);
    let mut u_star = FaceField::new(&spec, 0.0);
    let mut jumps = FaceField::new(&spec, 0.0);
    for face in spec.faces() {
        u_star.set(face, rng.gen_range(-2.0..2.0));
        jumps.set(face, rng.gen_range(-5.0..5.0));
    }
    let params = PhysicsParams {
        rho: rng.gen_range(1.0..1000.0),
        gravity: [0.0, 0.0],
        sigma: 0.0,
        dt: rng.gen_range(0.001..0.1),
    };
    RandomScene {
        spec,
        labels,
        phi,
        geom,
        map,
        u_star,
        jumps,
        open,
        params,
        source: rng.gen_range(-0.1..0.1),
    }
}

/// One side of a face in the saddle-point system.
#[derive(Clone, Copy, Debug)]
enum Side {
    Unknown(usize, f64),
    Known(f64),
}

/// Solution of the full saddle-point system over face velocities, liquid
/// pressures and bubble multipliers.
pub struct DenseSolution {
    /// Pressure per cell (liquid cells only).
    pub pressure: Vec<Option<f64>>,
    /// Multiplier per bubble (constrained bubbles only).
    pub multiplier: Vec<Option<f64>>,
    pub velocity: FaceField,
    /// Faces whose velocity is an unknown of the system.
    pub coupled: Vec<FaceIndex>,
    /// Smallest singular value over largest.
    pub conditioning: f64,
}

/// Builds the unreduced system directly from its definition: for every
/// pressure-coupled face, mass times velocity change plus the pressure
/// difference across the face vanishes; every liquid cell has the requested
/// divergence and every constrained bubble has zero net boundary flux. Only
/// bubbles that are constrained and touch liquid carry a multiplier.
pub fn dense_saddle_solve(scene: &RandomScene, active: &[bool]) -> DenseSolution {
    try_dense_saddle_solve(scene, active).expect("singular saddle-point system")
}

pub fn try_dense_saddle_solve(scene: &RandomScene, active: &[bool]) -> Option<DenseSolution> {
    let spec = &scene.spec;
    let map = &scene.map;
    let dx = spec.dx;
    let PhysicsParams { rho, dt, .. } = scene.params;
    let coupled: Vec<FaceIndex> = spec
        .faces()
        .filter(|&f| classify_face(spec, map, &scene.geom, scene.open, f) != FaceKind::Uncoupled)
        .collect();
    let nu = coupled.len();
    let mut face_slot = std::collections::HashMap::new();
    for (k, f) in coupled.iter().enumerate() {
        face_slot.insert(*f, k);
    }
    let mut cell_unknown = vec![None; spec.n_cells()];
    let mut n = nu;
    for (slot, label) in cell_unknown.iter_mut().zip(&map.labels) {
        if *label == Material::Liquid {
            *slot = Some(n);
            n += 1;
        }
    }
    let mut bubble_unknown = vec![None; map.n_bubbles];
    for (b, slot) in bubble_unknown.iter_mut().enumerate() {
        if active[b] {
            *slot = Some(n);
            n += 1;
        }
    }

    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut r = DVector::<f64>::zeros(n);
    let side = |cell: Option<usize>, face: FaceIndex| -> Side {
        match cell {
            None => Side::Known(0.0),
            Some(c) => match map.labels[c] {
                Material::Liquid => Side::Unknown(cell_unknown[c].unwrap(), 0.0),
                Material::Air => {
                    let b = map.bubble_id[c].unwrap();
                    let jump = scene.jumps.get(face);
                    match bubble_unknown[b] {
                        Some(u) => Side::Unknown(u, jump),
                        None => Side::Known(jump),
                    }
                }
                Material::Solid => unreachable!("coupled face next to a solid cell"),
            },
        }
    };
    for (row, &f) in coupled.iter().enumerate() {
        let w = scene.geom.w.get(f);
        let theta = scene.geom.theta.get(f);
        let m = rho * theta * w / dt;
        k[(row, row)] = m;
        r[row] = m * scene.u_star.get(f);
        let (minus, plus) = spec.face_cells(f);
        for (cell, sign) in [(minus, -1.0), (plus, 1.0)] {
            match side(cell, f) {
                Side::Unknown(col, known) => {
                    k[(row, col)] += sign * w / dx;
                    r[row] -= sign * w / dx * known;
                }
                Side::Known(v) => r[row] -= sign * w / dx * v,
            }
        }
    }
    // divergence rows
    let add_flux =
        |row: usize, face: FaceIndex, sign: f64, k: &mut DMatrix<f64>, r: &mut DVector<f64>| {
            let w = scene.geom.w.get(face);
            let us = scene.geom.solid_u.get(face);
            r[row] -= sign * (1.0 - w) * us / dx;
            match face_slot.get(&face) {
                Some(&col) => k[(row, col)] += sign * w / dx,
                None => r[row] -= sign * w * scene.u_star.get(face) / dx,
            }
        };
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let c = spec.cell_index(i, j);
            match map.labels[c] {
                Material::Liquid => {
                    let row = cell_unknown[c].unwrap();
                    r[row] += scene.source;
                    for (face, sign) in spec.cell_faces(i, j) {
                        add_flux(row, face, sign, &mut k, &mut r);
                    }
                }
                Material::Air => {
                    let b = map.bubble_id[c].unwrap();
                    let Some(row) = bubble_unknown[b] else {
                        continue;
                    };
                    for (face, sign) in spec.cell_faces(i, j) {
                        let (a, bb) = spec.face_cells(face);
                        let other = if a == Some(c) { bb } else { a };
                        let internal = other.is_some_and(|o| map.bubble_id[o] == Some(b));
                        if !internal {
                            add_flux(row, face, sign, &mut k, &mut r);
                        }
                    }
                }
                Material::Solid => {}
            }
        }
    }

    let sv = k.clone().svd(false, false).singular_values;
    let conditioning = sv.min() / sv.max();
    let x = k.lu().solve(&r)?;
    let mut velocity = scene.u_star.clone();
    for (slot, f) in coupled.iter().enumerate() {
        velocity.set(*f, x[slot]);
    }
    Some(DenseSolution {
        pressure: cell_unknown.iter().map(|u| u.map(|u| x[u])).collect(),
        multiplier: bubble_unknown.iter().map(|u| u.map(|u| x[u])).collect(),
        velocity,
        coupled,
        conditioning,
    })
}

/// Whether every liquid component can reach a fixed pressure (an open side
/// or an unconstrained bubble), so the pressure is unique.
pub fn well_posed(scene: &RandomScene, active: &[bool]) -> bool {
    try_dense_saddle_solve(scene, active).is_some_and(|s| s.conditioning > 1e-10)
}

/// Bubbles that are constrained and share a face with liquid.
pub fn constrained_with_liquid(scene: &RandomScene) -> Vec<bool> {
    let spec = &scene.spec;
    let map = &scene.map;
    let mut touches = vec![false; map.n_bubbles];
    for face in spec.faces() {
        if scene.geom.w.get(face) <= 0.0 {
            continue;
        }
        if let (Some(a), Some(b)) = spec.face_cells(face) {
            match (map.labels[a], map.labels[b]) {
                (Material::Liquid, Material::Air) => touches[map.bubble_id[b].unwrap()] = true,
                (Material::Air, Material::Liquid) => touches[map.bubble_id[a].unwrap()] = true,
                _ => {}
            }
        }
    }
    map.active
        .iter()
        .zip(&touches)
        .map(|(a, t)| *a && *t)
        .collect()
}

/// Plain free-surface pressure system written cell by cell: every air cell
/// and every open side is a Dirichlet boundary at the ghost-fluid interface.
pub struct Reference {
    pub rows: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

pub fn reference_system(scene: &RandomScene) -> Reference {
    let spec = &scene.spec;
    let labels = &scene.labels;
    let dx = spec.dx;
    let scale = scene.params.dt / (scene.params.rho * dx * dx);
    let liquid: Vec<usize> = (0..spec.n_cells())
        .filter(|&c| labels[c] == Material::Liquid)
        .collect();
    let mut row_of = vec![usize::MAX; spec.n_cells()];
    for (r, &c) in liquid.iter().enumerate() {
        row_of[c] = r;
    }
    let n = liquid.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for (r, &c) in liquid.iter().enumerate() {
        let (i, j) = spec.cell_coords(c);
        for (face, sign) in spec.cell_faces(i, j) {
            let w = scene.geom.w.get(face);
            let us = scene.geom.solid_u.get(face);
            b[r] -= sign * (w * scene.u_star.get(face) + (1.0 - w) * us) / dx;
            if w <= 0.0 {
                continue;
            }
            let (m, p) = spec.face_cells(face);
            let other = if m == Some(c) { p } else { m };
            match other.map(|o| labels[o]) {
                Some(Material::Liquid) => {
                    a[(r, r)] += scale * w;
                    a[(r, row_of[other.unwrap()])] -= scale * w;
                }
                Some(Material::Air) => {
                    let g = scale * w / scene.geom.theta.get(face);
                    a[(r, r)] += g;
                    b[r] += g * scene.jumps.get(face);
                }
                // only open sides keep a non-zero fraction on the boundary
                None => a[(r, r)] += scale * w,
                Some(Material::Solid) => unreachable!(),
            }
        }
        b[r] += scene.source;
    }
    Reference {
        rows: row_of,
        matrix: a,
        rhs: b,
    }
}

pub fn reference_velocity(scene: &RandomScene, r: &Reference, p: &DVector<f64>) -> FaceField {
    let spec = &scene.spec;
    let k = scene.params.dt / (scene.params.rho * spec.dx);
    let pressure = |c: Option<usize>, face| match c {
        None => 0.0,
        Some(c) => match scene.labels[c] {
            Material::Liquid => p[r.rows[c]],
            _ => scene.jumps.get(face),
        },
    };
    let mut u = scene.u_star.clone();
    for face in spec.faces() {
        let w = scene.geom.w.get(face);
        if w <= 0.0 {
            u.set(face, scene.geom.solid_u.get(face));
            continue;
        }
        let (m, pl) = spec.face_cells(face);
        let is_liquid = |c: Option<usize>| c.is_some_and(|c| scene.labels[c] == Material::Liquid);
        if !is_liquid(m) && !is_liquid(pl) {
            continue;
        }
        let theta = scene.geom.theta.get(face);
        let du = k / theta * (pressure(pl, face) - pressure(m, face));
        u.set(face, scene.u_star.get(face) - du);
    }
    u
}
