//! Small symmetric matrices (dimension 1 to 3) and their eigen-decomposition.

use super::{Point, MAX_DIM};

/// Symmetric `dim × dim` matrix stored as its upper triangle.
///
/// The six slots hold `(0,0) (0,1) (0,2) (1,1) (1,2) (2,2)`; slots outside
/// `dim` stay zero. Symmetry holds by construction since `(i, j)` and `(j, i)`
/// share a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    dim: usize,
    upper: [f64; 6],
}

const fn slot(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "matrix dimension {dim} out of range");
        Self { dim, upper: [0.0; 6] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, value);
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Rebuilds a matrix from its row-major upper triangle, as written by
    /// [`SymMat::upper_triangle`].
    pub fn from_upper_triangle(dim: usize, entries: &[f64]) -> Option<Self> {
        if entries.len() != Self::triangle_len(dim) {
            return None;
        }
        let mut m = Self::zeros(dim);
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, entries[k]);
                k += 1;
            }
        }
        Some(m)
    }

    pub const fn triangle_len(dim: usize) -> usize {
        dim * (dim + 1) / 2
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[slot(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.upper[slot(i, j)] = value;
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::triangle_len(self.dim));
        for i in 0..self.dim {
            for j in i..self.dim {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.get(i, j).powi(2);
            }
        }
        acc.sqrt()
    }

    /// Determinant by cofactor expansion.
    pub fn det(&self) -> f64 {
        let a = |i, j| self.get(i, j);
        match self.dim {
            1 => a(0, 0),
            2 => a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1),
            _ => {
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(1, 2))
                    - a(0, 1) * (a(0, 1) * a(2, 2) - a(1, 2) * a(0, 2))
                    + a(0, 2) * (a(0, 1) * a(1, 2) - a(1, 1) * a(0, 2))
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (o, b) in out.upper.iter_mut().zip(other.upper.iter()) {
            *o += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = *self;
        for o in out.upper.iter_mut() {
            *o *= factor;
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Point {
        let mut out = [0.0; MAX_DIM];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self.get(i, j) * v[j]).sum();
        }
        out
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let hv = self.mul_vec(v);
        (0..self.dim).map(|i| hv[i] * v[i]).sum()
    }

    /// `H²`, symmetric since `H` is.
    pub fn square(&self) -> Self {
        Self::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self.get(i, k) * self.get(k, j)).sum()
        })
    }

    /// `Q H Qᵀ` for a square `Q` given by rows.
    pub fn conjugate(&self, q: &[[f64; MAX_DIM]; MAX_DIM]) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += q[i][k] * self.get(k, l) * q[j][l];
                }
            }
            acc
        })
    }

    /// Applies a scalar function to the spectrum: `Q diag(f(λ)) Qᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let eig = sym_eigen(self);
        let mapped: Vec<f64> = eig.values().iter().map(|&l| f(l)).collect();
        SymEigen::compose(self.dim, &mapped, &eig.vectors)
    }
}

/// Eigen-decomposition of a [`SymMat`], eigenvalues ascending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen {
    dim: usize,
    values: [f64; MAX_DIM],
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: [[f64; MAX_DIM]; MAX_DIM],
}

impl SymEigen {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k][..self.dim]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.dim - 1]
    }

    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> SymMat {
        Self::compose(self.dim, self.values(), &self.vectors)
    }

    fn compose(dim: usize, values: &[f64], vectors: &[[f64; MAX_DIM]; MAX_DIM]) -> SymMat {
        SymMat::from_fn(dim, |i, j| {
            (0..dim).map(|k| values[k] * vectors[k][i] * vectors[k][j]).sum()
        })
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.
///
/// Closed form up to dimension 2, cyclic Jacobi in dimension 3.
pub fn sym_eigen(m: &SymMat) -> SymEigen {
    match m.dim() {
        1 => SymEigen {
            dim: 1,
            values: [m.get(0, 0), 0.0, 0.0],
            vectors: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        },
        2 => eigen_2x2(m.get(0, 0), m.get(0, 1), m.get(1, 1)),
        _ => jacobi_3x3(m),
    }
}

fn eigen_2x2(a: f64, b: f64, c: f64) -> SymEigen {
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    // Angle of the eigenvector belonging to the larger eigenvalue.
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (sin, cos) = theta.sin_cos();
    SymEigen {
        dim: 2,
        values: [mean - radius, mean + radius, 0.0],
        vectors: [[-sin, cos, 0.0], [cos, sin, 0.0], [0.0, 0.0, 1.0]],
    }
}

fn jacobi_3x3(m: &SymMat) -> SymEigen {
    let mut a = [[0.0; 3]; 3];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m.get(i, j);
        }
    }
    // Columns of `v` accumulate the eigenvectors.
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let scale = m.frobenius_norm();
    for _sweep in 0..64 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off <= (f64::EPSILON * scale).powi(2) * 1e-4 || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
            let c = 1.0 / t.hypot(1.0);
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (k, &col) in order.iter().enumerate() {
        values[k] = a[col][col];
        for i in 0..3 {
            vectors[k][i] = v[i][col];
        }
    }
    SymEigen {
        dim: 3,
        values,
        vectors,
    }
}
