//! Bubble region identification, enclosure detection and pruning of
//! redundant bubble constraints.
//!
//! Every connected air region is a bubble, including exterior air. Inside a
//! volume sealed by solids, the liquid's own incompressibility already fixes
//! one bubble's volume once the others are held, so one constraint per sealed
//! volume is dropped: the one on the bubble with the most liquid surface.

use std::collections::VecDeque;

use crate::faces::{FaceGeometry, OpenSides};
use crate::grid::GridSpec;
use crate::levelset::Material;

/// Labels one connected component per call order over cells satisfying
/// `member`, using face adjacency. Seeds are visited in raster order so ids
/// are deterministic.
pub fn connected_components(
    spec: &GridSpec,
    member: impl Fn(usize) -> bool,
) -> (Vec<Option<usize>>, usize) {
    let n = spec.n_cells();
    let mut ids = vec![None; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if ids[seed].is_some() || !member(seed) {
            continue;
        }
        ids[seed] = Some(count);
        queue.push_back(seed);
        while let Some(c) = queue.pop_front() {
            let (i, j) = spec.cell_coords(c);
            let mut visit = |nb: usize| {
                if ids[nb].is_none() && member(nb) {
                    ids[nb] = Some(count);
                    queue.push_back(nb);
                }
            };
            if i > 0 {
                visit(c - 1);
            }
            if i + 1 < spec.nx {
                visit(c + 1);
            }
            if j > 0 {
                visit(c - spec.nx);
            }
            if j + 1 < spec.ny {
                visit(c + spec.nx);
            }
        }
        count += 1;
    }
    (ids, count)
}

/// Connected air regions under 4-connectivity.
pub fn label_bubbles(spec: &GridSpec, labels: &[Material]) -> (Vec<Option<usize>>, usize) {
    connected_components(spec, |c| labels[c] == Material::Air)
}

/// A connected non-solid volume and the bubbles inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct EnclosureGroup {
    pub cells: Vec<usize>,
    pub bubbles: Vec<usize>,
    /// No member cell touches an open domain side.
    pub enclosed: bool,
}

pub fn find_enclosure_groups(
    spec: &GridSpec,
    labels: &[Material],
    bubble_id: &[Option<usize>],
    open: OpenSides,
) -> Vec<EnclosureGroup> {
    let (gid, count) = connected_components(spec, |c| labels[c] != Material::Solid);
    let mut groups: Vec<EnclosureGroup> = (0..count)
        .map(|_| EnclosureGroup {
            cells: Vec::new(),
            bubbles: Vec::new(),
            enclosed: true,
        })
        .collect();
    for (c, g) in gid.iter().enumerate() {
        let Some(g) = *g else { continue };
        let group = &mut groups[g];
        group.cells.push(c);
        let (i, j) = spec.cell_coords(c);
        if open.touches(spec, i, j) {
            group.enclosed = false;
        }
        if let Some(b) = bubble_id[c] {
            if !group.bubbles.contains(&b) {
                group.bubbles.push(b);
            }
        }
    }
    for g in &mut groups {
        g.bubbles.sort_unstable();
    }
    groups
}

/// Total liquid-air face area (`w * dx`) per bubble.
pub fn bubble_liquid_area(
    spec: &GridSpec,
    labels: &[Material],
    bubble_id: &[Option<usize>],
    n_bubbles: usize,
    geom: &FaceGeometry,
) -> Vec<f64> {
    let mut area = vec![0.0; n_bubbles];
    for face in spec.faces() {
        if let (Some(a), Some(b)) = spec.face_cells(face) {
            let bubble = match (labels[a], labels[b]) {
                (Material::Liquid, Material::Air) => bubble_id[b],
                (Material::Air, Material::Liquid) => bubble_id[a],
                _ => None,
            };
            if let Some(id) = bubble {
                area[id] += geom.w.get(face) * spec.dx;
            }
        }
    }
    area
}

/// Per-bubble material bookkeeping for one projection.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialMap {
    pub spec: GridSpec,
    pub labels: Vec<Material>,
    pub bubble_id: Vec<Option<usize>>,
    pub n_bubbles: usize,
    /// Whether the constraint of each bubble is enforced.
    pub active: Vec<bool>,
    pub liquid_area: Vec<f64>,
}

impl MaterialMap {
    /// Labels bubbles and measures their liquid surface. All bubbles start
    /// active.
    pub fn new(spec: GridSpec, labels: Vec<Material>, geom: &FaceGeometry) -> Self {
        let (bubble_id, n_bubbles) = label_bubbles(&spec, &labels);
        let liquid_area = bubble_liquid_area(&spec, &labels, &bubble_id, n_bubbles, geom);
        Self {
            spec,
            labels,
            bubble_id,
            n_bubbles,
            active: vec![true; n_bubbles],
            liquid_area,
        }
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn deactivate_all(&mut self) {
        self.active.fill(false);
    }

    /// Air cell count of every bubble.
    pub fn bubble_cell_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_bubbles];
        for id in self.bubble_id.iter().flatten() {
            counts[*id] += 1;
        }
        counts
    }

    /// Bubble containing a world point, if that cell is air.
    pub fn bubble_at(&self, p: [f64; 2]) -> Option<usize> {
        if !self.spec.contains(p) {
            return None;
        }
        let (i, j) = self.spec.cell_at(p);
        self.bubble_id[self.spec.cell_index(i, j)]
    }

    /// Bubbles with a cell on an open domain side.
    pub fn bubbles_touching(&self, open: OpenSides) -> Vec<usize> {
        let mut out = Vec::new();
        if !open.any() {
            return out;
        }
        for (c, id) in self.bubble_id.iter().enumerate() {
            if let Some(id) = *id {
                let (i, j) = self.spec.cell_coords(c);
                if open.touches(&self.spec, i, j) && !out.contains(&id) {
                    out.push(id);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Decide which bubble constraints are enforced.
///
/// Bubbles named in `free_surface` are unconstrained. Then every enclosed
/// group whose bubbles are all still constrained drops the constraint of its
/// bubble with the largest liquid area (lowest id on ties). A group that
/// already holds an unconstrained bubble keeps the rest.
pub fn prune_constraints(
    map: &MaterialMap,
    groups: &[EnclosureGroup],
    free_surface: &[usize],
) -> Vec<bool> {
    let mut active = vec![true; map.n_bubbles];
    for &id in free_surface {
        if id < active.len() {
            active[id] = false;
        }
    }
    for group in groups.iter().filter(|g| g.enclosed) {
        if group.bubbles.is_empty() || group.bubbles.iter().any(|&b| !active[b]) {
            continue;
        }
        let mut best = group.bubbles[0];
        for &b in &group.bubbles[1..] {
            if map.liquid_area[b] > map.liquid_area[best] {
                best = b;
            }
        }
        active[best] = false;
    }
    active
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Field2;

    fn map_from(rows: &[&str]) -> (GridSpec, Vec<Material>) {
        let ny = rows.len();
        let nx = rows[0].len();
        let spec = GridSpec::new(nx, ny, 1.0, [0.0, 0.0]).unwrap();
        let mut labels = vec![Material::Liquid; nx * ny];
        // first row of the picture is the top of the grid
        for (r, row) in rows.iter().enumerate() {
            let j = ny - 1 - r;
            for (i, ch) in row.chars().enumerate() {
                labels[spec.cell_index(i, j)] = match ch {
                    'L' => Material::Liquid,
                    'A' => Material::Air,
                    'S' => Material::Solid,
                    _ => panic!("bad cell {ch}"),
                };
            }
        }
        (spec, labels)
    }

    fn geom(spec: &GridSpec, labels: &[Material]) -> FaceGeometry {
        let phi = Field2::from_fn(spec.nx, spec.ny, |i, j| {
            match labels[spec.cell_index(i, j)] {
                Material::Liquid => -0.5,
                _ => 0.5,
            }
        });
        FaceGeometry::unobstructed(spec, labels, &phi, OpenSides::closed())
    }

    #[test]
    fn all_liquid_has_no_bubbles() {
        let (spec, labels) = map_from(&["LLL", "LLL", "LLL"]);
        assert_eq!(label_bubbles(&spec, &labels).1, 0);
    }

    #[test]
    fn diagonal_air_cells_are_separate() {
        let (spec, labels) = map_from(&["ALL", "LAL", "LLL"]);
        assert_eq!(label_bubbles(&spec, &labels).1, 2);
    }

    #[test]
    fn nested_regions_get_distinct_ids() {
        let (spec, labels) = map_from(&[
            "AAAAAAA", "ALLLLLA", "ALLLLLA", "ALLALLA", "ALLLLLA", "ALLLLLA", "AAAAAAA",
        ]);
        let (ids, n) = label_bubbles(&spec, &labels);
        assert_eq!(n, 2);
        let ring = ids[spec.cell_index(0, 0)].unwrap();
        let hole = ids[spec.cell_index(3, 3)].unwrap();
        assert_ne!(ring, hole);
    }

    #[test]
    fn single_air_cell_area() {
        let (spec, labels) = map_from(&["LLL", "LAL", "LLL"]);
        let g = geom(&spec, &labels);
        let map = MaterialMap::new(spec, labels, &g);
        assert_eq!(map.liquid_area, vec![4.0]);
    }

    #[test]
    fn half_solid_face_area() {
        let (spec, labels) = map_from(&["LLL", "LAL", "LLL"]);
        let mut g = geom(&spec, &labels);
        g.w.set(crate::grid::FaceIndex::x(1, 1), 0.5);
        let map = MaterialMap::new(spec, labels, &g);
        assert_eq!(map.liquid_area, vec![3.5]);
    }

    #[test]
    fn air_in_solid_corner_area() {
        let (spec, labels) = map_from(&["SSS", "SAL", "SLL"]);
        let g = geom(&spec, &labels);
        let map = MaterialMap::new(spec, labels, &g);
        assert_eq!(map.liquid_area, vec![2.0]);
    }

    #[test]
    fn enclosure_examples() {
        let (spec, labels) = map_from(&["AAAA", "LLLL", "LALL", "LLLL"]);
        let (ids, _) = label_bubbles(&spec, &labels);
        let groups = find_enclosure_groups(&spec, &labels, &ids, OpenSides::closed());
        assert_eq!(groups.len(), 1);
        assert!(groups[0].enclosed);
        assert_eq!(groups[0].bubbles, vec![0, 1]);

        let (spec, labels) = map_from(&["LSL", "LSL", "ASA"]);
        let (ids, _) = label_bubbles(&spec, &labels);
        let groups = find_enclosure_groups(&spec, &labels, &ids, OpenSides::closed());
        assert_eq!(groups.len(), 2);

        let open = OpenSides {
            top: true,
            ..OpenSides::default()
        };
        let (spec, labels) = map_from(&["ASL", "LSL", "LSL"]);
        let (ids, _) = label_bubbles(&spec, &labels);
        let groups = find_enclosure_groups(&spec, &labels, &ids, open);
        assert!(groups.iter().all(|g| !g.enclosed));
    }

    #[test]
    fn single_enclosed_bubble_is_unconstrained() {
        let (spec, labels) = map_from(&["AAA", "LLL", "LLL"]);
        let g = geom(&spec, &labels);
        let map = MaterialMap::new(spec, labels, &g);
        let groups = find_enclosure_groups(&spec, &map.labels, &map.bubble_id, OpenSides::closed());
        assert_eq!(prune_constraints(&map, &groups, &[]), vec![false]);
    }

    #[test]
    fn two_bubbles_keep_the_smaller_surface() {
        // top air touches 5 liquid faces, the pocket 3 (it sits on the floor)
        let (spec, labels) = map_from(&["AAAAA", "LLLLL", "LLLLL", "LLALL"]);
        let g = geom(&spec, &labels);
        let map = MaterialMap::new(spec, labels, &g);
        assert_eq!(map.liquid_area, vec![3.0, 5.0]);
        let groups = find_enclosure_groups(&spec, &map.labels, &map.bubble_id, OpenSides::closed());
        assert_eq!(prune_constraints(&map, &groups, &[]), vec![true, false]);
    }

    #[test]
    fn areas_ten_and_four() {
        let spec = GridSpec::new(3, 3, 1.0, [0.0, 0.0]).unwrap();
        let map = MaterialMap {
            spec,
            labels: vec![Material::Air; 9],
            bubble_id: vec![Some(0); 9],
            n_bubbles: 2,
            active: vec![true; 2],
            liquid_area: vec![10.0, 4.0],
        };
        let groups = vec![EnclosureGroup {
            cells: (0..9).collect(),
            bubbles: vec![0, 1],
            enclosed: true,
        }];
        assert_eq!(prune_constraints(&map, &groups, &[]), vec![false, true]);
        let tie = MaterialMap {
            liquid_area: vec![4.0, 4.0],
            ..map
        };
        assert_eq!(prune_constraints(&tie, &groups, &[]), vec![false, true]);
    }

    #[test]
    fn open_top_with_marked_exterior() {
        let open = OpenSides {
            top: true,
            ..OpenSides::default()
        };
        let (spec, labels) = map_from(&["AAAAA", "LLLLL", "LLALL", "LLLLL"]);
        let g = geom(&spec, &labels);
        let map = MaterialMap::new(spec, labels, &g);
        let groups = find_enclosure_groups(&spec, &map.labels, &map.bubble_id, open);
        let exterior = map.bubble_at([0.5, 3.5]).unwrap();
        let active = prune_constraints(&map, &groups, &[exterior]);
        assert_eq!(active.iter().filter(|a| **a).count(), 1);
        assert!(active[map.bubble_at([2.5, 1.5]).unwrap()]);
    }

    #[test]
    fn marked_free_bubble_in_closed_box_keeps_others() {
        let (spec, labels) = map_from(&["AAAAA", "LLLLL", "LLALL", "LLLLL"]);
        let g = geom(&spec, &labels);
        let map = MaterialMap::new(spec, labels, &g);
        let groups = find_enclosure_groups(&spec, &map.labels, &map.bubble_id, OpenSides::closed());
        let exterior = map.bubble_at([0.5, 3.5]).unwrap();
        let active = prune_constraints(&map, &groups, &[exterior]);
        assert!(active[map.bubble_at([2.5, 1.5]).unwrap()]);
    }
}
