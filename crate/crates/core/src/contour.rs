//! Zero isocontour of a cell-centered level set by marching squares over
//! the dual grid of cell centers, plus area and length measurements.

use crate::grid::{Field2, GridSpec};

/// A piece of the zero isocontour inside dual square `square`, whose
/// lower-left corner is cell `square`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub square: (usize, usize),
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }

    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let d = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 {
            (((p[0] - self.a[0]) * d[0] + (p[1] - self.a[1]) * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (p[0] - self.a[0] - t * d[0]).hypot(p[1] - self.a[1] - t * d[1])
    }
}

/// Corner values of a dual square in counter-clockwise order starting at
/// the lower left.
fn corners(phi: &Field2, i: usize, j: usize) -> [f64; 4] {
    [
        phi[(i, j)],
        phi[(i + 1, j)],
        phi[(i + 1, j + 1)],
        phi[(i, j + 1)],
    ]
}

/// Local corner coordinates (in cells) matching `corners`.
const CORNER_POS: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

/// Crossing point on edge `e` (from corner `e` to corner `e + 1`).
fn edge_point(v: &[f64; 4], e: usize) -> [f64; 2] {
    let (a, b) = (v[e], v[(e + 1) % 4]);
    let t = a / (a - b);
    let (p, q) = (CORNER_POS[e], CORNER_POS[(e + 1) % 4]);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

fn crosses(v: &[f64; 4], e: usize) -> bool {
    (v[e] < 0.0) != (v[(e + 1) % 4] < 0.0)
}

/// Pairs of crossed edges joined by a segment, in local coordinates.
fn local_segments(v: &[f64; 4]) -> Vec<([f64; 2], [f64; 2])> {
    let edges: Vec<usize> = (0..4).filter(|&e| crosses(v, e)).collect();
    match edges.len() {
        2 => vec![(edge_point(v, edges[0]), edge_point(v, edges[1]))],
        4 => {
            let center_negative = v.iter().sum::<f64>() < 0.0;
            // cut off the corners whose sign differs from the center
            let cut: Vec<usize> = (0..4)
                .filter(|&k| (v[k] < 0.0) != center_negative)
                .collect();
            cut.iter()
                .map(|&k| (edge_point(v, (k + 3) % 4), edge_point(v, k)))
                .collect()
        }
        _ => Vec::new(),
    }
}

fn polygon_area(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for k in 0..n {
        let (p, q) = (pts[k], pts[(k + 1) % n]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s.abs()
}

/// Fraction of a dual square where the piecewise-linear level set is
/// non-negative.
fn positive_fraction(v: &[f64; 4]) -> f64 {
    let n_neg = v.iter().filter(|x| **x < 0.0).count();
    if n_neg == 0 {
        return 1.0;
    }
    if n_neg == 4 {
        return 0.0;
    }
    let saddle = n_neg == 2 && (v[0] < 0.0) == (v[2] < 0.0);
    if saddle && v.iter().sum::<f64>() < 0.0 {
        // two separate positive corners
        return (0..4)
            .filter(|&k| v[k] >= 0.0)
            .map(|k| polygon_area(&[edge_point(v, (k + 3) % 4), CORNER_POS[k], edge_point(v, k)]))
            .sum();
    }
    let mut poly = Vec::with_capacity(8);
    for k in 0..4 {
        if v[k] >= 0.0 {
            poly.push(CORNER_POS[k]);
        }
        if crosses(v, k) {
            poly.push(edge_point(v, k));
        }
    }
    polygon_area(&poly)
}

/// All contour segments in world coordinates.
pub fn zero_crossings(spec: &GridSpec, phi: &Field2) -> Vec<Segment> {
    let mut out = Vec::new();
    if spec.nx < 2 || spec.ny < 2 {
        return out;
    }
    for j in 0..spec.ny - 1 {
        for i in 0..spec.nx - 1 {
            let v = corners(phi, i, j);
            let base = spec.cell_center(i, j);
            let world = |p: [f64; 2]| [base[0] + p[0] * spec.dx, base[1] + p[1] * spec.dx];
            for (a, b) in local_segments(&v) {
                out.push(Segment {
                    a: world(a),
                    b: world(b),
                    square: (i, j),
                });
            }
        }
    }
    out
}

/// Area of the non-negative region and contour length, both restricted to
/// the dual squares accepted by `select`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ContourMetrics {
    pub area: f64,
    pub perimeter: f64,
}

impl ContourMetrics {
    /// `4 pi A / P^2`; one for a circle.
    pub fn isoperimetric_ratio(&self) -> f64 {
        if self.perimeter <= 0.0 {
            return 0.0;
        }
        4.0 * std::f64::consts::PI * self.area / (self.perimeter * self.perimeter)
    }
}

pub fn region_metrics(
    spec: &GridSpec,
    phi: &Field2,
    select: impl Fn(usize, usize) -> bool,
) -> ContourMetrics {
    let mut m = ContourMetrics::default();
    let cell_area = spec.dx * spec.dx;
    for j in 0..spec.ny.saturating_sub(1) {
        for i in 0..spec.nx.saturating_sub(1) {
            if !select(i, j) {
                continue;
            }
            let v = corners(phi, i, j);
            m.area += positive_fraction(&v) * cell_area;
            for (a, b) in local_segments(&v) {
                m.perimeter += (b[0] - a[0]).hypot(b[1] - a[1]) * spec.dx;
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(n: usize, dx: f64, r: f64) -> (GridSpec, Field2) {
        let spec = GridSpec::new(n, n, dx, [0.0, 0.0]).unwrap();
        let c = n as f64 * dx / 2.0 + 0.013;
        // positive inside, so the measured region is the disk
        let phi = Field2::from_fn(n, n, |i, j| {
            let p = spec.cell_center(i, j);
            r - (p[0] - c).hypot(p[1] - c)
        });
        (spec, phi)
    }

    #[test]
    fn disk_area_and_perimeter() {
        let (spec, phi) = disk(64, 1.0 / 64.0, 0.3);
        let m = region_metrics(&spec, &phi, |_, _| true);
        let pi = std::f64::consts::PI;
        assert!((m.area - pi * 0.09).abs() / (pi * 0.09) < 2e-3);
        assert!((m.perimeter - 2.0 * pi * 0.3).abs() / (2.0 * pi * 0.3) < 2e-3);
        assert!(m.isoperimetric_ratio() > 0.99);
    }

    #[test]
    fn square_ratio_is_pi_over_four() {
        let spec = GridSpec::new(40, 40, 0.1, [0.0, 0.0]).unwrap();
        // max-norm distance gives an axis-aligned square of half-width 1
        let phi = Field2::from_fn(40, 40, |i, j| {
            let p = spec.cell_center(i, j);
            1.0 - (p[0] - 2.0).abs().max((p[1] - 2.0).abs())
        });
        let m = region_metrics(&spec, &phi, |_, _| true);
        // each corner is cut by one diagonal
        assert!((m.area - 4.0).abs() < 0.01);
        assert!((m.perimeter - 8.0).abs() < 0.15);
        let r = m.isoperimetric_ratio();
        assert!(r > std::f64::consts::FRAC_PI_4 && r < 0.82);
    }

    #[test]
    fn saddle_fraction_is_bounded() {
        let v = [-1.0, 1.0, -1.0, 1.0];
        let f = positive_fraction(&v);
        assert!(f > 0.0 && f < 1.0);
        assert_eq!(local_segments(&v).len(), 2);
    }

    #[test]
    fn segment_distance() {
        let s = Segment {
            a: [0.0, 0.0],
            b: [2.0, 0.0],
            square: (0, 0),
        };
        assert_eq!(s.distance([1.0, 3.0]), 3.0);
        assert_eq!(s.distance([-3.0, 4.0]), 5.0);
    }
}
