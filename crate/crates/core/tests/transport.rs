use bubblesim::advect::advect_scalar_compensated;
use bubblesim::contour::region_metrics;
use bubblesim::grid::{FaceField, FaceIndex, Field2, GridSpec};
use bubblesim::redistance::redistance;

#[test]
fn rotated_disk_keeps_its_area() {
    let n = 64;
    let spec = GridSpec::new(n, n, 1.0 / n as f64, [0.0, 0.0]).unwrap();
    let (c, r) = ([0.5, 0.75], 0.15);
    // positive inside so the measured region is the disk
    let mut phi = Field2::from_fn(n, n, |i, j| {
        let p = spec.cell_center(i, j);
        r - (p[0] - c[0]).hypot(p[1] - c[1])
    });
    let mut vel = FaceField::new(&spec, 0.0);
    let omega = std::f64::consts::TAU;
    for face in spec.faces() {
        let p = spec.face_center(face);
        let v = match face {
            FaceIndex {
                axis: bubblesim::Axis::X,
                ..
            } => -omega * (p[1] - 0.5),
            _ => omega * (p[0] - 0.5),
        };
        vel.set(face, v);
    }
    let a0 = std::f64::consts::PI * r * r;
    let steps = 200;
    for _ in 0..steps {
        phi = advect_scalar_compensated(&spec, &phi, &vel, 1.0 / steps as f64);
        phi = redistance(&spec, &phi).phi;
    }
    let a = region_metrics(&spec, &phi, |_, _| true).area;
    assert!((a - a0).abs() <= 0.1 * a0, "area {a} vs {a0}");
}
