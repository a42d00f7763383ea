//! Staggered (MAC) grid storage.
//!
//! Pressures and level sets live at cell centers; velocities are stored as
//! face-normal components, `u` on x-normal faces and `v` on y-normal faces.

use std::ops::{Index, IndexMut};

use crate::SimError;

/// Uniform square-cell grid layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    /// World position of the lower corner of cell (0, 0).
    pub origin: [f64; 2],
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, origin: [f64; 2]) -> Result<Self, SimError> {
        if nx < 3 || ny < 3 {
            return Err(SimError::Config(format!(
                "grid must be at least 3x3 cells, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(SimError::Config(format!("dx must be positive, got {dx}")));
        }
        Ok(Self { nx, ny, dx, origin })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dx,
        ]
    }

    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.dx,
            self.origin[1] + j as f64 * self.dx,
        ]
    }

    /// Midpoint of a face.
    pub fn face_center(&self, face: FaceIndex) -> [f64; 2] {
        match face.axis {
            Axis::X => [
                self.origin[0] + face.i as f64 * self.dx,
                self.origin[1] + (face.j as f64 + 0.5) * self.dx,
            ],
            Axis::Y => [
                self.origin[0] + (face.i as f64 + 0.5) * self.dx,
                self.origin[1] + face.j as f64 * self.dx,
            ],
        }
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.dx, self.ny as f64 * self.dx]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let e = self.extent();
        p[0] >= self.origin[0]
            && p[1] >= self.origin[1]
            && p[0] <= self.origin[0] + e[0]
            && p[1] <= self.origin[1] + e[1]
    }

    /// Cell containing a world point, clamped to the grid.
    pub fn cell_at(&self, p: [f64; 2]) -> (usize, usize) {
        let fx = ((p[0] - self.origin[0]) / self.dx).floor();
        let fy = ((p[1] - self.origin[1]) / self.dx).floor();
        let i = fx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fy.clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    pub fn cell_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn face_shape(&self, axis: Axis) -> (usize, usize) {
        match axis {
            Axis::X => (self.nx + 1, self.ny),
            Axis::Y => (self.nx, self.ny + 1),
        }
    }

    /// Sample offset (in cells) of the storage points of a staggered component.
    pub fn face_offset(axis: Axis) -> [f64; 2] {
        match axis {
            Axis::X => [0.0, 0.5],
            Axis::Y => [0.5, 0.0],
        }
    }

    /// The cells on the negative and positive side of a face. `None` marks
    /// the outside of the domain.
    pub fn face_cells(&self, face: FaceIndex) -> (Option<usize>, Option<usize>) {
        let FaceIndex { axis, i, j } = face;
        match axis {
            Axis::X => {
                let minus = (i > 0).then(|| self.cell_index(i - 1, j));
                let plus = (i < self.nx).then(|| self.cell_index(i, j));
                (minus, plus)
            }
            Axis::Y => {
                let minus = (j > 0).then(|| self.cell_index(i, j - 1));
                let plus = (j < self.ny).then(|| self.cell_index(i, j));
                (minus, plus)
            }
        }
    }

    /// The four faces of a cell with their outward signs, in the fixed order
    /// -x, +x, -y, +y.
    pub fn cell_faces(&self, i: usize, j: usize) -> [(FaceIndex, f64); 4] {
        [
            (FaceIndex::x(i, j), -1.0),
            (FaceIndex::x(i + 1, j), 1.0),
            (FaceIndex::y(i, j), -1.0),
            (FaceIndex::y(i, j + 1), 1.0),
        ]
    }

    /// Every face of the grid: all x-faces in row-major order, then all y-faces.
    pub fn faces(&self) -> impl Iterator<Item = FaceIndex> + '_ {
        let (ux, uy) = self.face_shape(Axis::X);
        let (vx, vy) = self.face_shape(Axis::Y);
        let xs = (0..uy).flat_map(move |j| (0..ux).map(move |i| FaceIndex::x(i, j)));
        let ys = (0..vy).flat_map(move |j| (0..vx).map(move |i| FaceIndex::y(i, j)));
        xs.chain(ys)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceIndex {
    pub axis: Axis,
    pub i: usize,
    pub j: usize,
}

impl FaceIndex {
    pub fn x(i: usize, j: usize) -> Self {
        Self {
            axis: Axis::X,
            i,
            j,
        }
    }

    pub fn y(i: usize, j: usize) -> Self {
        Self {
            axis: Axis::Y,
            i,
            j,
        }
    }

    /// The two nodes bounding this face.
    pub fn endpoints(&self) -> [(usize, usize); 2] {
        match self.axis {
            Axis::X => [(self.i, self.j), (self.i, self.j + 1)],
            Axis::Y => [(self.i, self.j), (self.i + 1, self.j)],
        }
    }
}

/// Dense row-major 2D array of scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2 {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl Field2 {
    pub fn new(nx: usize, ny: usize, value: f64) -> Self {
        Self {
            nx,
            ny,
            data: vec![value; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(i, j));
            }
        }
        Self { nx, ny, data }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    /// Value at `(i, j)` with indices clamped to the array.
    #[inline]
    pub fn clamped(&self, i: isize, j: isize) -> f64 {
        let i = i.clamp(0, self.nx as isize - 1) as usize;
        let j = j.clamp(0, self.ny as isize - 1) as usize;
        self.data[j * self.nx + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Bilinear interpolation at fractional index coordinates, clamped to the
    /// array bounds.
    pub fn interpolate(&self, fx: f64, fy: f64) -> f64 {
        let fx = fx.clamp(0.0, (self.nx - 1) as f64);
        let fy = fy.clamp(0.0, (self.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j0 = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let i1 = (i0 + 1).min(self.nx - 1);
        let j1 = (j0 + 1).min(self.ny - 1);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let a = self[(i0, j0)] * (1.0 - tx) + self[(i1, j0)] * tx;
        let b = self[(i0, j1)] * (1.0 - tx) + self[(i1, j1)] * tx;
        a * (1.0 - ty) + b * ty
    }
}

impl Index<(usize, usize)> for Field2 {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.nx + i]
    }
}

impl IndexMut<(usize, usize)> for Field2 {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.nx + i]
    }
}

/// A pair of staggered face arrays, one per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    pub u: Field2,
    pub v: Field2,
}

impl FaceField {
    pub fn new(spec: &GridSpec, value: f64) -> Self {
        let (ux, uy) = spec.face_shape(Axis::X);
        let (vx, vy) = spec.face_shape(Axis::Y);
        Self {
            u: Field2::new(ux, uy, value),
            v: Field2::new(vx, vy, value),
        }
    }

    pub fn component(&self, axis: Axis) -> &Field2 {
        match axis {
            Axis::X => &self.u,
            Axis::Y => &self.v,
        }
    }

    pub fn component_mut(&mut self, axis: Axis) -> &mut Field2 {
        match axis {
            Axis::X => &mut self.u,
            Axis::Y => &mut self.v,
        }
    }

    #[inline]
    pub fn get(&self, face: FaceIndex) -> f64 {
        self.component(face.axis)[(face.i, face.j)]
    }

    #[inline]
    pub fn set(&mut self, face: FaceIndex, value: f64) {
        self.component_mut(face.axis)[(face.i, face.j)] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }
}

/// Boolean mask over staggered faces.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceMask {
    nu: (usize, usize),
    nv: (usize, usize),
    u: Vec<bool>,
    v: Vec<bool>,
}

impl FaceMask {
    pub fn new(spec: &GridSpec, value: bool) -> Self {
        let nu = spec.face_shape(Axis::X);
        let nv = spec.face_shape(Axis::Y);
        Self {
            nu,
            nv,
            u: vec![value; nu.0 * nu.1],
            v: vec![value; nv.0 * nv.1],
        }
    }

    #[inline]
    pub fn get(&self, face: FaceIndex) -> bool {
        match face.axis {
            Axis::X => self.u[face.j * self.nu.0 + face.i],
            Axis::Y => self.v[face.j * self.nv.0 + face.i],
        }
    }

    #[inline]
    pub fn set(&mut self, face: FaceIndex, value: bool) {
        match face.axis {
            Axis::X => self.u[face.j * self.nu.0 + face.i] = value,
            Axis::Y => self.v[face.j * self.nv.0 + face.i] = value,
        }
    }

    pub fn count(&self) -> usize {
        self.u.iter().chain(self.v.iter()).filter(|b| **b).count()
    }
}

/// The grid itself: layout plus velocity faces and a generic cell array.
#[derive(Clone, Debug)]
pub struct StaggeredGrid {
    pub spec: GridSpec,
    pub velocity: FaceField,
    pub cell_data: Field2,
}

impl StaggeredGrid {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            velocity: FaceField::new(&spec, 0.0),
            cell_data: Field2::new(spec.nx, spec.ny, 0.0),
            spec,
        }
    }

    /// Velocity vector at a world position (bilinear per component).
    pub fn sample_velocity(&self, p: [f64; 2]) -> [f64; 2] {
        sample_velocity(&self.spec, &self.velocity, p)
    }
}

/// Interpolate one staggered or cell-centered array at a world position.
pub fn sample_at(spec: &GridSpec, field: &Field2, offset: [f64; 2], p: [f64; 2]) -> f64 {
    let fx = (p[0] - spec.origin[0]) / spec.dx - offset[0];
    let fy = (p[1] - spec.origin[1]) / spec.dx - offset[1];
    field.interpolate(fx, fy)
}

pub fn sample_velocity(spec: &GridSpec, vel: &FaceField, p: [f64; 2]) -> [f64; 2] {
    [
        sample_at(spec, &vel.u, GridSpec::face_offset(Axis::X), p),
        sample_at(spec, &vel.v, GridSpec::face_offset(Axis::Y), p),
    ]
}

pub const CELL_OFFSET: [f64; 2] = [0.5, 0.5];
