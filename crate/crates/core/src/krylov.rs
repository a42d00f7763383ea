//! Sparse symmetric storage and a Jacobi-preconditioned conjugate gradient
//! solver.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

/// Rows at or above this count use row-parallel products. Each row is still
/// summed serially, so results do not depend on the thread count.
const PARALLEL_ROWS: usize = 16_384;

/// True residual is recomputed this often to limit recurrence drift.
const RESIDUAL_REFRESH: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-positive diagonal entry {value} in row {row}")]
    NonPositiveDiagonal { row: usize, value: f64 },
    #[error("solver diverged (non-finite value) at iteration {iteration}")]
    Divergence { iteration: usize },
}

/// Symmetric matrix with full (both triangles) row-compressed storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates symmetric increments. Entries of a row are merged in
/// insertion order, so `A[i,j]` and `A[j,i]` are summed identically.
#[derive(Clone, Debug)]
pub struct SymBuilder {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SymBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        self.rows[i].push((i, v));
    }

    /// Adds `v` to both `A[i,j]` and `A[j,i]`.
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.rows[i].push((i, v));
        } else {
            self.rows[i].push((j, v));
            self.rows[j].push((i, v));
        }
    }

    pub fn build(self) -> SparseSymMatrix {
        let n = self.rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            // stable: equal columns keep insertion order
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                cols.push(c);
                vals.push(sum);
            }
            row_ptr.push(cols.len());
        }
        SparseSymMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl SparseSymMatrix {
    pub fn identity(n: usize) -> Self {
        let mut b = SymBuilder::new(n);
        for i in 0..n {
            b.add_diag(i, 1.0);
        }
        b.build()
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut b = SymBuilder::new(d.len());
        for (i, v) in d.iter().enumerate() {
            b.add_diag(i, *v);
        }
        b.build()
    }

    /// Builds from a dense row-major square matrix, keeping non-zeros.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|A[i,j] - A[j,i]|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[i * self.n + j] = v;
            }
        }
        d
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.vals[k] * x[self.cols[k]];
        }
        s
    }

    fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        if self.n >= PARALLEL_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    /// Writes the matrix in Matrix Market symmetric coordinate format
    /// (lower triangle, 1-based).
    pub fn write_matrix_market<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let lower: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|i| {
                self.row(i)
                    .filter(move |(j, _)| *j <= i)
                    .map(move |(j, v)| (i, j, v))
            })
            .collect();
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "{} {} {}", self.n, self.n, lower.len())?;
        for (i, j, v) in lower {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

pub fn matvec(a: &SparseSymMatrix, x: &[f64]) -> Result<Vec<f64>, SolverError> {
    if x.len() != a.n {
        return Err(SolverError::DimensionMismatch {
            expected: a.n,
            found: x.len(),
        });
    }
    let mut y = vec![0.0; a.n];
    a.mul_into(x, &mut y);
    Ok(y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    /// Diagonal (Jacobi) scaling.
    Jacobi,
    /// Plain conjugate gradient.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSettings {
    /// Relative residual target `||b - Ax|| / ||b||`.
    pub tolerance: f64,
    /// `None` means ten times the system size.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub wall_time: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned CG with the default iteration cap.
pub fn pcg_solve(
    a: &SparseSymMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    cg_solve(
        a,
        b,
        &CgSettings {
            tolerance: tol,
            max_iterations: Some(max_iter),
            preconditioner: Preconditioner::Jacobi,
        },
    )
}

/// Conjugate gradient from a zero initial guess. Returns the first iterate
/// whose true residual meets the tolerance. Otherwise, once the iteration cap
/// is hit or the recurrence breaks down, returns the iterate with the smallest
/// true residual seen, with `converged = false`.
pub fn cg_solve(
    a: &SparseSymMatrix,
    b: &[f64],
    settings: &CgSettings,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let start = Instant::now();
    let n = a.n;
    if b.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let diag = a.diagonal();
    if let Some((row, &value)) = diag
        .iter()
        .enumerate()
        .find(|(_, d)| d.is_nan() || **d <= 0.0)
    {
        return Err(SolverError::NonPositiveDiagonal { row, value });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::Divergence { iteration: 0 });
    }
    let inv_diag: Vec<f64> = match settings.preconditioner {
        Preconditioner::Jacobi => diag.iter().map(|d| 1.0 / d).collect(),
        Preconditioner::Identity => vec![1.0; n],
    };
    let max_iter = settings.max_iterations.unwrap_or(10 * n.max(1));
    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
                wall_time: start.elapsed().as_secs_f64(),
            },
        ));
    }
    let target = settings.tolerance * b_norm;

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let mut res_norm = b_norm;
    // best iterate by true residual, kept for when the target is out of reach
    let mut best = (b_norm, x.clone());

    while iterations < max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap.is_nan() || pap <= 0.0 {
            if pap.is_nan() {
                return Err(SolverError::Divergence {
                    iteration: iterations,
                });
            }
            // breakdown: the search direction carries no more information
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        iterations += 1;

        let refresh = iterations % RESIDUAL_REFRESH == 0;
        res_norm = norm(&r);
        if refresh || res_norm <= target {
            a.mul_into(&x, &mut ap);
            for k in 0..n {
                r[k] = b[k] - ap[k];
            }
            res_norm = norm(&r);
            if !res_norm.is_finite() {
                return Err(SolverError::Divergence {
                    iteration: iterations,
                });
            }
            if res_norm < best.0 {
                best = (res_norm, x.clone());
            }
            if res_norm <= target {
                break;
            }
        }

        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }

    if res_norm > target {
        // a stagnated run can drift; hand back the best iterate seen
        a.mul_into(&x, &mut ap);
        let current = norm(&b.iter().zip(&ap).map(|(b, y)| b - y).collect::<Vec<_>>());
        if best.0 < current {
            x = best.1;
            res_norm = best.0;
        } else {
            res_norm = current;
        }
    }
    let relative_residual = res_norm / b_norm;
    Ok((
        x,
        SolveReport {
            iterations,
            relative_residual,
            converged: res_norm <= target,
            wall_time: start.elapsed().as_secs_f64(),
        },
    ))
}
