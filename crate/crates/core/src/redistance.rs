//! Reinitialization of a level set to a signed distance while keeping its
//! zero isocontour.
//!
//! Cells straddling the zero crossing keep their own value, so repeated
//! reinitialization does not move the interface; only a badly scaled
//! gradient there is renormalized. The contour is extracted by marching squares; every other cell
//! receives its distance to the nearest contour segment, found by propagating
//! closest-segment candidates with alternating Gauss-Seidel sweeps.

use crate::contour::{zero_crossings, Segment};
use crate::grid::{Field2, GridSpec};

const MAX_ROUNDS: usize = 6;
const SEED_BAND: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Redistanced {
    pub phi: Field2,
    /// `false` when the input has no zero crossing; `phi` is then the input.
    pub has_interface: bool,
}

pub fn redistance(spec: &GridSpec, phi: &Field2) -> Redistanced {
    let segments = zero_crossings(spec, phi);
    if segments.is_empty() {
        return Redistanced {
            phi: phi.clone(),
            has_interface: false,
        };
    }
    let (nx, ny) = (spec.nx, spec.ny);
    let mut closest: Vec<Option<u32>> = vec![None; nx * ny];
    let mut dist = vec![f64::INFINITY; nx * ny];
    let center = |c: usize| spec.cell_center(c % nx, c / nx);

    for (k, s) in segments.iter().enumerate() {
        // exact distances in a band around the square
        let (i, j) = s.square;
        for b in j.saturating_sub(SEED_BAND)..(j + 2 + SEED_BAND).min(ny) {
            for a in i.saturating_sub(SEED_BAND)..(i + 2 + SEED_BAND).min(nx) {
                let idx = b * nx + a;
                let d = s.distance(center(idx));
                if d < dist[idx] {
                    dist[idx] = d;
                    closest[idx] = Some(k as u32);
                }
            }
        }
    }

    let try_neighbor =
        |idx: usize, n: usize, closest: &[Option<u32>], dist: &mut [f64]| -> Option<u32> {
            let k = closest[n]?;
            let d = segments[k as usize].distance(center(idx));
            if d < dist[idx] {
                dist[idx] = d;
                Some(k)
            } else {
                None
            }
        };

    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        for (rev_i, rev_j) in [(false, false), (true, false), (false, true), (true, true)] {
            for jj in 0..ny {
                let j = if rev_j { ny - 1 - jj } else { jj };
                for ii in 0..nx {
                    let i = if rev_i { nx - 1 - ii } else { ii };
                    let idx = j * nx + i;
                    for (di, dj) in NEIGHBORS {
                        let (a, b) = (i as isize + di, j as isize + dj);
                        if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                            continue;
                        }
                        let n = b as usize * nx + a as usize;
                        if let Some(k) = try_neighbor(idx, n, &closest, &mut dist) {
                            closest[idx] = Some(k);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut out = phi.clone();
    for (o, d) in out.data_mut().iter_mut().zip(&dist) {
        *o = if *o < 0.0 { -d } else { *d };
    }
    for j in 0..ny {
        for i in 0..nx {
            if is_interface_cell(phi, i, j) {
                if let Some(v) = normalized_value(phi, i, j, spec.dx) {
                    out[(i, j)] = v;
                }
            }
        }
    }
    Redistanced {
        phi: out,
        has_interface: true,
    }
}

/// Whether a 4-neighbor lies on the other side of the zero level.
pub fn is_interface_cell(phi: &Field2, i: usize, j: usize) -> bool {
    let (nx, ny) = phi.shape();
    let neg = phi[(i, j)] < 0.0;
    let differs = |a: usize, b: usize| (phi[(a, b)] < 0.0) != neg;
    (i > 0 && differs(i - 1, j))
        || (i + 1 < nx && differs(i + 1, j))
        || (j > 0 && differs(i, j - 1))
        || (j + 1 < ny && differs(i, j + 1))
}

/// The input value, or `phi / |grad phi|` when the gradient length is far
/// from one. `None` for a vanishing gradient.
fn normalized_value(phi: &Field2, i: usize, j: usize, dx: f64) -> Option<f64> {
    let (nx, ny) = phi.shape();
    let diff = |lo: f64, c: f64, hi: f64, has_lo: bool, has_hi: bool| match (has_lo, has_hi) {
        (true, true) => (hi - lo) / (2.0 * dx),
        (true, false) => (c - lo) / dx,
        (false, true) => (hi - c) / dx,
        (false, false) => 0.0,
    };
    let c = phi[(i, j)];
    let gx = diff(
        if i > 0 { phi[(i - 1, j)] } else { c },
        c,
        if i + 1 < nx { phi[(i + 1, j)] } else { c },
        i > 0,
        i + 1 < nx,
    );
    let gy = diff(
        if j > 0 { phi[(i, j - 1)] } else { c },
        c,
        if j + 1 < ny { phi[(i, j + 1)] } else { c },
        j > 0,
        j + 1 < ny,
    );
    let g = gx.hypot(gy);
    if (0.75..=4.0 / 3.0).contains(&g) {
        return Some(c);
    }
    if g < 1e-3 {
        return None;
    }
    let v = c / g;
    // keep the sign convention that zero belongs to the non-negative side
    Some(if c < 0.0 { v.min(-0.0) } else { v.max(0.0) })
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, 0),
    (1, 0),
    (0, -1),
    (0, 1),
    (-1, -1),
    (1, -1),
    (-1, 1),
    (1, 1),
];

/// Distance from a point to the nearest of `segments` by brute force.
pub fn brute_force_distance(segments: &[Segment], p: [f64; 2]) -> f64 {
    segments
        .iter()
        .map(|s| s.distance(p))
        .fold(f64::INFINITY, f64::min)
}
