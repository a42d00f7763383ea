//! Shape and level measurements on a running simulation.

use bubblesim::contour::{region_metrics, ContourMetrics};
use bubblesim::grid::{Field2, GridSpec};
use bubblesim::levelset::{occupancy, Material};
use bubblesim::regions::MaterialMap;

/// Area and perimeter of the air bubble containing `p`, measured on the
/// zero contour of the liquid level set. `None` if `p` is not in a bubble.
pub fn bubble_shape(map: &MaterialMap, phi_liquid: &Field2, p: [f64; 2]) -> Option<ContourMetrics> {
    let id = map.bubble_at(p)?;
    let spec = &map.spec;
    let nx = spec.nx;
    let corner_ids = |i: usize, j: usize| {
        [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)].map(|(a, b)| map.bubble_id[b * nx + a])
    };
    // dual squares touching the bubble and no other air region
    let select = |i: usize, j: usize| {
        let ids = corner_ids(i, j);
        ids.contains(&Some(id)) && ids.iter().all(|c| c.is_none() || *c == Some(id))
    };
    Some(region_metrics(spec, phi_liquid, select))
}

/// Mean liquid height over the cell columns whose centers lie in
/// `[x0, x1)`: liquid area there divided by the width.
pub fn liquid_level(
    spec: &GridSpec,
    phi_liquid: &Field2,
    labels: &[Material],
    x0: f64,
    x1: f64,
) -> f64 {
    let mut area = 0.0;
    let mut columns = 0;
    for i in 0..spec.nx {
        let x = spec.cell_center(i, 0)[0];
        if x < x0 || x >= x1 {
            continue;
        }
        columns += 1;
        for j in 0..spec.ny {
            let c = spec.cell_index(i, j);
            if labels[c] != Material::Solid {
                area += occupancy(phi_liquid[(i, j)], spec.dx) * spec.dx * spec.dx;
            }
        }
    }
    if columns == 0 {
        return 0.0;
    }
    area / (columns as f64 * spec.dx)
}
