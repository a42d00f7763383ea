//! Layered extension of face velocities from valid faces into the rest of
//! the grid.

use crate::grid::{Axis, FaceField, FaceIndex, FaceMask, GridSpec};

/// Number of averaging layers used by the time loop.
pub const DEFAULT_LAYERS: usize = 4;

fn neighbors(shape: (usize, usize), i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
    let (nx, ny) = shape;
    let mut out = [(usize::MAX, usize::MAX); 4];
    if i > 0 {
        out[0] = (i - 1, j);
    }
    if i + 1 < nx {
        out[1] = (i + 1, j);
    }
    if j > 0 {
        out[2] = (i, j - 1);
    }
    if j + 1 < ny {
        out[3] = (i, j + 1);
    }
    out.into_iter().filter(|n| n.0 != usize::MAX)
}

/// Each layer sets every invalid face that has valid same-axis neighbors to
/// their mean and marks it valid. Faces still invalid after `layers` passes
/// are set to zero. Returns the extended field and its final mask.
pub fn extrapolate_velocity(
    spec: &GridSpec,
    velocity: &FaceField,
    valid: &FaceMask,
    layers: usize,
) -> (FaceField, FaceMask) {
    let mut vel = velocity.clone();
    let mut mask = valid.clone();
    for axis in [Axis::X, Axis::Y] {
        let shape = spec.face_shape(axis);
        let face = |i, j| match axis {
            Axis::X => FaceIndex::x(i, j),
            Axis::Y => FaceIndex::y(i, j),
        };
        for _ in 0..layers {
            let mut updates = Vec::new();
            for j in 0..shape.1 {
                for i in 0..shape.0 {
                    if mask.get(face(i, j)) {
                        continue;
                    }
                    let (mut sum, mut n) = (0.0, 0);
                    for (a, b) in neighbors(shape, i, j) {
                        if mask.get(face(a, b)) {
                            sum += vel.get(face(a, b));
                            n += 1;
                        }
                    }
                    if n > 0 {
                        updates.push((face(i, j), sum / n as f64));
                    }
                }
            }
            if updates.is_empty() {
                break;
            }
            for (f, v) in updates {
                vel.set(f, v);
                mask.set(f, true);
            }
        }
        for j in 0..shape.1 {
            for i in 0..shape.0 {
                if !mask.get(face(i, j)) {
                    vel.set(face(i, j), 0.0);
                }
            }
        }
    }
    (vel, mask)
}
