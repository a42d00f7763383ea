//! Signed-distance scene primitives (negative inside) with optional
//! prescribed translation.

use crate::grid::{Axis, FaceIndex, GridSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Box {
        min: [f64; 2],
        max: [f64; 2],
    },
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// Everything on the side of `point` opposite to `normal`.
    HalfPlane {
        point: [f64; 2],
        normal: [f64; 2],
    },
}

impl Shape {
    /// Exact signed distance of the standalone shape.
    pub fn sdf(&self, p: [f64; 2]) -> f64 {
        match *self {
            Shape::Box { min, max } => {
                let c = [(min[0] + max[0]) * 0.5, (min[1] + max[1]) * 0.5];
                let h = [(max[0] - min[0]) * 0.5, (max[1] - min[1]) * 0.5];
                let qx = (p[0] - c[0]).abs() - h[0];
                let qy = (p[1] - c[1]).abs() - h[1];
                let outside = qx.max(0.0).hypot(qy.max(0.0));
                outside + qx.max(qy).min(0.0)
            }
            Shape::Circle { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) - radius,
            Shape::HalfPlane { point, normal } => {
                let len = normal[0].hypot(normal[1]);
                ((p[0] - point[0]) * normal[0] + (p[1] - point[1]) * normal[1]) / len
            }
        }
    }

    /// Points that must lie in the domain for the shape to be well placed.
    pub fn anchor_points(&self) -> Vec<[f64; 2]> {
        match *self {
            Shape::Box { min, max } => vec![min, max],
            Shape::Circle { center, .. } => vec![center],
            Shape::HalfPlane { point, .. } => vec![point],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsgOp {
    Union,
    Subtract,
}

/// One leg of a piecewise-constant velocity schedule, active from `start`
/// until the next segment begins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionSegment {
    pub start: f64,
    pub velocity: [f64; 2],
}

/// Rigid translation schedule. Before the first segment the body is at rest.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Motion {
    segments: Vec<MotionSegment>,
}

impl Motion {
    pub fn new(mut segments: Vec<MotionSegment>) -> Self {
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        Self { segments }
    }

    pub fn is_static(&self) -> bool {
        self.segments
            .iter()
            .all(|s| s.velocity[0] == 0.0 && s.velocity[1] == 0.0)
    }

    pub fn segments(&self) -> &[MotionSegment] {
        &self.segments
    }

    pub fn velocity(&self, t: f64) -> [f64; 2] {
        self.segments
            .iter()
            .rev()
            .find(|s| s.start <= t)
            .map(|s| s.velocity)
            .unwrap_or([0.0, 0.0])
    }

    /// Integrated displacement from time 0 to `t`.
    pub fn displacement(&self, t: f64) -> [f64; 2] {
        let mut d = [0.0, 0.0];
        for (k, seg) in self.segments.iter().enumerate() {
            if seg.start >= t {
                break;
            }
            let end = self
                .segments
                .get(k + 1)
                .map(|n| n.start)
                .unwrap_or(f64::INFINITY)
                .min(t);
            let from = seg.start.max(0.0);
            if end > from {
                d[0] += seg.velocity[0] * (end - from);
                d[1] += seg.velocity[1] * (end - from);
            }
        }
        d
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryPrimitive {
    pub shape: Shape,
    pub op: CsgOp,
    pub motion: Motion,
}

impl GeometryPrimitive {
    pub fn new(shape: Shape, op: CsgOp) -> Self {
        Self {
            shape,
            op,
            motion: Motion::default(),
        }
    }

    pub fn union(shape: Shape) -> Self {
        Self::new(shape, CsgOp::Union)
    }

    pub fn subtract(shape: Shape) -> Self {
        Self::new(shape, CsgOp::Subtract)
    }

    pub fn with_motion(mut self, motion: Motion) -> Self {
        self.motion = motion;
        self
    }

    /// Signed distance of the primitive translated to its position at `t`.
    pub fn sdf_at(&self, p: [f64; 2], t: f64) -> f64 {
        let d = self.motion.displacement(t);
        self.shape.sdf([p[0] - d[0], p[1] - d[1]])
    }
}

/// Ordered CSG composition of primitives.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene {
    pub primitives: Vec<GeometryPrimitive>,
}

impl Scene {
    pub fn new(primitives: Vec<GeometryPrimitive>) -> Self {
        Self { primitives }
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn has_motion(&self) -> bool {
        self.primitives.iter().any(|p| !p.motion.is_static())
    }

    /// Union takes the minimum, subtraction the maximum with the negated
    /// primitive. An empty scene is infinitely far away.
    pub fn sdf(&self, p: [f64; 2], t: f64) -> f64 {
        self.primitives
            .iter()
            .fold(f64::INFINITY, |acc, prim| match prim.op {
                CsgOp::Union => acc.min(prim.sdf_at(p, t)),
                CsgOp::Subtract => acc.max(-prim.sdf_at(p, t)),
            })
    }

    /// Normal velocity at time `t` of the solid occupying `face`. The owner is
    /// the union primitive with the most negative distance at the face
    /// midpoint when placed at `t_geometry`, the time the solid labels were
    /// taken at.
    pub fn sample_solid_velocity(
        &self,
        spec: &GridSpec,
        face: FaceIndex,
        t_geometry: f64,
        t: f64,
    ) -> f64 {
        let mid = spec.face_center(face);
        let owner = self
            .primitives
            .iter()
            .filter(|p| p.op == CsgOp::Union)
            .map(|p| (p.sdf_at(mid, t_geometry), p))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match owner {
            Some((_, prim)) => {
                let v = prim.motion.velocity(t);
                match face.axis {
                    Axis::X => v[0],
                    Axis::Y => v[1],
                }
            }
            None => 0.0,
        }
    }
}
