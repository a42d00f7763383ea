//! Per-face cut-cell fractions, ghost-fluid liquid fractions and prescribed
//! solid velocities.

use crate::grid::{FaceField, FaceIndex, Field2, GridSpec};
use crate::levelset::{face_fraction, ghost_theta, Material};

/// Which domain sides are open to an unbounded exterior. Closed sides act as
/// static solid walls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpenSides {
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
}

impl OpenSides {
    pub fn closed() -> Self {
        Self::default()
    }

    pub fn any(&self) -> bool {
        self.left || self.right || self.bottom || self.top
    }

    /// Whether cell `(i, j)` has a face on an open side.
    pub fn touches(&self, spec: &GridSpec, i: usize, j: usize) -> bool {
        (self.left && i == 0)
            || (self.right && i + 1 == spec.nx)
            || (self.bottom && j == 0)
            || (self.top && j + 1 == spec.ny)
    }

    /// Whether a boundary face lies on an open side.
    pub fn is_open(&self, spec: &GridSpec, face: FaceIndex) -> bool {
        match face.axis {
            crate::grid::Axis::X => (face.i == 0 && self.left) || (face.i == spec.nx && self.right),
            crate::grid::Axis::Y => (face.j == 0 && self.bottom) || (face.j == spec.ny && self.top),
        }
    }
}

/// Cut-cell and ghost-fluid coefficients for every face.
#[derive(Clone, Debug)]
pub struct FaceGeometry {
    /// Non-solid fraction. Faces touching a solid-labeled cell or a closed
    /// domain side are fully solid.
    pub w: FaceField,
    /// Ghost-fluid liquid fraction; 1 away from liquid-air faces.
    pub theta: FaceField,
    /// Prescribed normal velocity of the solid part of the face.
    pub solid_u: FaceField,
}

impl FaceGeometry {
    /// `solid_nodes` holds the solid signed distance at the grid nodes,
    /// shape `(nx + 1) x (ny + 1)`.
    pub fn build(
        spec: &GridSpec,
        labels: &[Material],
        phi_liquid: &Field2,
        solid_nodes: &Field2,
        open: OpenSides,
        solid_velocity: impl Fn(FaceIndex) -> f64,
    ) -> Self {
        let mut w = FaceField::new(spec, 0.0);
        let mut theta = FaceField::new(spec, 1.0);
        let mut solid_u = FaceField::new(spec, 0.0);
        for face in spec.faces() {
            let (minus, plus) = spec.face_cells(face);
            let [e0, e1] = face.endpoints();
            let raw = face_fraction(solid_nodes[e0], solid_nodes[e1]);
            let frac = match (minus, plus) {
                (Some(a), Some(b)) => {
                    if labels[a] == Material::Solid || labels[b] == Material::Solid {
                        0.0
                    } else {
                        raw
                    }
                }
                (Some(c), None) | (None, Some(c)) => {
                    if open.is_open(spec, face) && labels[c] != Material::Solid {
                        raw
                    } else {
                        0.0
                    }
                }
                (None, None) => unreachable!("face without cells"),
            };
            w.set(face, frac);
            if frac < 1.0 {
                // closed domain walls are static unless a solid body sits there
                let u = match (minus, plus) {
                    (Some(_), Some(_)) => solid_velocity(face),
                    (Some(c), None) | (None, Some(c)) => {
                        if labels[c] == Material::Solid || open.is_open(spec, face) {
                            solid_velocity(face)
                        } else {
                            0.0
                        }
                    }
                    (None, None) => 0.0,
                };
                solid_u.set(face, u);
            }
            if let (Some(a), Some(b)) = (minus, plus) {
                let t = match (labels[a], labels[b]) {
                    (Material::Liquid, Material::Air) => {
                        ghost_theta(phi_liquid.data()[a], phi_liquid.data()[b])
                    }
                    (Material::Air, Material::Liquid) => {
                        ghost_theta(phi_liquid.data()[b], phi_liquid.data()[a])
                    }
                    _ => 1.0,
                };
                theta.set(face, t);
            }
        }
        Self { w, theta, solid_u }
    }

    /// Geometry with no solids inside the domain.
    pub fn unobstructed(
        spec: &GridSpec,
        labels: &[Material],
        phi_liquid: &Field2,
        open: OpenSides,
    ) -> Self {
        let nodes = Field2::new(spec.nx + 1, spec.ny + 1, 1.0);
        Self::build(spec, labels, phi_liquid, &nodes, open, |_| 0.0)
    }
}

/// Solid signed distance sampled at grid nodes.
pub fn sample_nodes(spec: &GridSpec, sdf: impl Fn([f64; 2]) -> f64) -> Field2 {
    Field2::from_fn(spec.nx + 1, spec.ny + 1, |i, j| {
        sdf(spec.node_position(i, j))
    })
}
