mod common;

use bubblesim::faces::{FaceGeometry, OpenSides};
use bubblesim::grid::{FaceField, Field2, GridSpec};
use bubblesim::krylov::matvec;
use bubblesim::levelset::Material;
use bubblesim::projection::{assemble_reduced_system, PhysicsParams, ProjectionProblem};
use bubblesim::regions::{find_enclosure_groups, prune_constraints, MaterialMap};
use common::random_scene;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Closed box: a wall hangs from the lid, an air pocket sits under the lid
/// on each side of it, liquid connects the two halves underneath. The right
/// pocket is wider, so it has more liquid surface.
const TWO_POCKETS: [&str; 8] = [
    "AAASAAAAAA",
    "AAASAAAAAA",
    "LLLSLLLLLL",
    "LLLSLLLLLL",
    "LLLLLLLLLL",
    "LLLLLLLLLL",
    "LLLLLLLLLL",
    "LLLLLLLLLL",
];

fn picture(rows: &[&str]) -> (GridSpec, Vec<Material>) {
    let ny = rows.len();
    let nx = rows[0].len();
    let spec = GridSpec::new(nx, ny, 0.1, [0.0, 0.0]).unwrap();
    let mut labels = vec![Material::Liquid; nx * ny];
    for (r, row) in rows.iter().enumerate() {
        for (i, ch) in row.chars().enumerate() {
            labels[spec.cell_index(i, ny - 1 - r)] = match ch {
                'L' => Material::Liquid,
                'A' => Material::Air,
                _ => Material::Solid,
            };
        }
    }
    (spec, labels)
}

fn parts(spec: &GridSpec, labels: &[Material]) -> (Field2, FaceGeometry, MaterialMap) {
    let phi = Field2::from_fn(spec.nx, spec.ny, |i, j| {
        match labels[spec.cell_index(i, j)] {
            Material::Liquid => -0.6 * spec.dx,
            _ => 0.4 * spec.dx,
        }
    });
    let geom = FaceGeometry::unobstructed(spec, labels, &phi, OpenSides::closed());
    let map = MaterialMap::new(*spec, labels.to_vec(), &geom);
    (phi, geom, map)
}

fn a_times_ones(problem: &ProjectionProblem) -> (f64, f64, usize) {
    let system = assemble_reduced_system(problem);
    let n = system.matrix.dim();
    let y = matvec(&system.matrix, &vec![1.0; n]).unwrap();
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm, system.matrix.max_abs(), n)
}

#[test]
fn two_sealed_pockets_keep_one_constraint() {
    let (spec, labels) = picture(&TWO_POCKETS);
    let (_, geom, mut map) = parts(&spec, &labels);
    assert_eq!(map.n_bubbles, 2);
    let groups = find_enclosure_groups(&spec, &labels, &map.bubble_id, OpenSides::closed());
    let active = prune_constraints(&map, &groups, &[]);
    assert_eq!(active.iter().filter(|a| **a).count(), 1);
    let left = map.bubble_at([0.05, 0.75]).unwrap();
    let right = map.bubble_at([0.85, 0.75]).unwrap();
    assert!(map.liquid_area[right] > map.liquid_area[left]);
    assert!(!active[right] && active[left]);

    // both forced on: the constant vector is in the null space
    let u = FaceField::new(&spec, 0.0);
    let jumps = FaceField::new(&spec, 0.0);
    let params = PhysicsParams {
        rho: 1000.0,
        gravity: [0.0, -9.81],
        sigma: 0.0,
        dt: 0.01,
    };
    map.active = vec![true; 2];
    let problem = ProjectionProblem {
        spec: &spec,
        u_star: &u,
        map: &map,
        geom: &geom,
        jumps: &jumps,
        params,
        open: OpenSides::closed(),
        source: 0.0,
    };
    let (norm, amax, n) = a_times_ones(&problem);
    assert!(norm <= 1e-12 * amax * n as f64, "{norm}");

    // pruned: positive definite
    let mut pruned = map.clone();
    pruned.active = active;
    let problem = ProjectionProblem {
        map: &pruned,
        ..problem
    };
    let system = assemble_reduced_system(&problem);
    let n = system.matrix.dim();
    let dense = DMatrix::from_row_slice(n, n, &system.matrix.to_dense());
    let eig = dense.symmetric_eigenvalues();
    assert!(
        eig.min() > 1e-8 * eig.max(),
        "smallest eigenvalue {}",
        eig.min()
    );
}

#[test]
fn closed_scenes_with_every_bubble_constrained_are_singular() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 20 {
        let mut scene = random_scene(&mut rng);
        scene.open = OpenSides::closed();
        scene.geom = FaceGeometry::build(
            &scene.spec,
            &scene.labels,
            &scene.phi,
            &Field2::new(scene.spec.nx + 1, scene.spec.ny + 1, 1.0),
            scene.open,
            |_| 0.0,
        );
        scene.map = MaterialMap::new(scene.spec, scene.labels.clone(), &scene.geom);
        if scene.map.n_bubbles == 0 {
            continue;
        }
        scene.map.active.fill(true);
        let (norm, amax, n) = a_times_ones(&scene.problem());
        if n == 0 {
            continue;
        }
        assert!(norm <= 1e-12 * amax * n as f64);
        checked += 1;
    }
}

#[test]
fn pruning_restores_definiteness_wherever_air_reaches_the_liquid() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut checked = 0;
    while checked < 20 {
        let mut scene = random_scene(&mut rng);
        scene.open = OpenSides::closed();
        scene.geom = FaceGeometry::build(
            &scene.spec,
            &scene.labels,
            &scene.phi,
            &Field2::new(scene.spec.nx + 1, scene.spec.ny + 1, 1.0),
            scene.open,
            |_| 0.0,
        );
        scene.map = MaterialMap::new(scene.spec, scene.labels.clone(), &scene.geom);
        let groups =
            find_enclosure_groups(&scene.spec, &scene.labels, &scene.map.bubble_id, scene.open);
        // every liquid cell must share a sealed volume with some air
        let mut ok = true;
        for g in &groups {
            let has_liquid = g.cells.iter().any(|&c| scene.labels[c] == Material::Liquid);
            if has_liquid && g.bubbles.is_empty() {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        scene.map.active = prune_constraints(&scene.map, &groups, &[]);
        let system = assemble_reduced_system(&scene.problem());
        let n = system.matrix.dim();
        if n == 0 {
            continue;
        }
        let dense = DMatrix::from_row_slice(n, n, &system.matrix.to_dense());
        let eig = dense.symmetric_eigenvalues();
        assert!(
            eig.min() > 1e-10 * eig.max(),
            "smallest eigenvalue {}",
            eig.min()
        );
        checked += 1;
    }
}
