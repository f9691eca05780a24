//! Uniform-grid fields and the finite-difference machinery shared by the
//! other modules.
//!
//! Grids are isotropic (one spacing for every axis) and at most
//! three-dimensional. Node order is row-major: the last axis varies fastest.

mod interp;
mod stencil;
mod sym;

pub use interp::{resample, restrict};
pub use stencil::{gradient, hessian, hessian_at};
pub(crate) use stencil::{d1 as stencil_d1, d2 as stencil_d2};
pub use sym::{sym_eigen, SymEigen, SymMat};

use thiserror::Error;

pub const MAX_DIM: usize = 3;

/// A point or multi-index padded to [`MAX_DIM`] entries.
pub type Point = [f64; MAX_DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("grid dimension {0} not supported (expected 1, 2 or 3)")]
    Dimension(usize),
    #[error("grid spacing must be positive and finite, got {0}")]
    Spacing(f64),
    #[error("axis {axis} has {nodes} nodes, at least 3 are required")]
    TooFewNodes { axis: usize, nodes: usize },
    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("point {0:?} lies outside the grid domain")]
    OutOfDomain(Vec<f64>),
    #[error("fields are sampled on different grids")]
    GridMismatch,
}

/// Uniform rectangular grid with isotropic spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    strides: [usize; MAX_DIM],
}

impl Grid {
    pub fn new(origin: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Result<Self, FieldError> {
        let dim = shape.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(FieldError::Dimension(dim));
        }
        if origin.len() != dim {
            return Err(FieldError::Arity {
                expected: dim,
                got: origin.len(),
            });
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(FieldError::Spacing(spacing));
        }
        if let Some((axis, &nodes)) = shape.iter().enumerate().find(|(_, &n)| n < 3) {
            return Err(FieldError::TooFewNodes { axis, nodes });
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(FieldError::NonFinite(0));
        }
        let mut strides = [0; MAX_DIM];
        let mut acc = 1;
        for axis in (0..dim).rev() {
            strides[axis] = acc;
            acc *= shape[axis];
        }
        Ok(Self {
            origin,
            spacing,
            shape,
            strides,
        })
    }

    /// `n` nodes per axis spanning `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self, FieldError> {
        if n < 3 {
            return Err(FieldError::TooFewNodes { axis: 0, nodes: n });
        }
        Self::new(vec![lo; dim], (hi - lo) / (n - 1) as f64, vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Largest coordinate along `axis`.
    pub fn upper(&self, axis: usize) -> f64 {
        self.origin[axis] + (self.shape[axis] - 1) as f64 * self.spacing
    }

    pub fn flat(&self, index: &[usize]) -> usize {
        (0..self.dim()).map(|a| index[a] * self.strides[a]).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for axis in 0..self.dim() {
            idx[axis] = flat / self.strides[axis];
            flat %= self.strides[axis];
        }
        idx
    }

    pub fn coord(&self, flat: usize) -> Point {
        let idx = self.multi_index(flat);
        let mut p = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            p[axis] = self.origin[axis] + idx[axis] as f64 * self.spacing;
        }
        p
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] + 1 == self.shape[a])
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| !self.is_boundary(k))
    }

    /// Signed distance from `p` to the boundary of the grid box, measured in the
    /// max norm: positive inside, negative outside.
    pub fn inset(&self, p: &[f64]) -> f64 {
        (0..self.dim())
            .map(|a| (p[a] - self.origin[a]).min(self.upper(a) - p[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Node closest to `p`, clamped into the grid.
    pub fn nearest(&self, p: &[f64]) -> usize {
        let mut idx = [0; MAX_DIM];
        for axis in 0..self.dim() {
            let t = ((p[axis] - self.origin[axis]) / self.spacing).round();
            idx[axis] = t.clamp(0.0, (self.shape[axis] - 1) as f64) as usize;
        }
        self.flat(&idx)
    }

    /// Neighbouring node `offset` steps along `axis`, if it exists.
    pub fn step(&self, flat: usize, axis: usize, offset: isize) -> Option<usize> {
        let i = self.multi_index(flat)[axis] as isize + offset;
        if i < 0 || i >= self.shape[axis] as isize {
            None
        } else {
            Some((flat as isize + offset * self.strides[axis] as isize) as usize)
        }
    }
}

/// Scalar samples at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(k));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the node coordinates. `f` receives a slice of length `dim`.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self, FieldError> {
        let dim = grid.dim();
        let values = (0..grid.len()).map(|k| f(&grid.coord(k)[..dim])).collect();
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &Grid, value: f64) -> Result<Self, FieldError> {
        Self::new(grid.clone(), vec![value; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, FieldError> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multilinear interpolation at `p`. Points may sit up to `slack` outside
    /// the box; they are clamped onto it.
    pub fn interpolate_within(&self, p: &[f64], slack: f64) -> Result<f64, FieldError> {
        interp::multilinear(&self.grid, &self.values, p, slack)
    }

    pub fn interpolate(&self, p: &[f64]) -> Result<f64, FieldError> {
        self.interpolate_within(p, 1e-9 * self.grid.spacing())
    }

    /// Tensor-product cubic Lagrange interpolation on the 4ᵈ nodes around `p`;
    /// exact on polynomials of degree three per axis. Axes with fewer than four
    /// nodes fall back to multilinear interpolation.
    pub fn interpolate_cubic(&self, p: &[f64]) -> Result<f64, FieldError> {
        interp::cubic(&self.grid, &self.values, p, 1e-9 * self.grid.spacing())
    }
}

/// Per-node vectors with `ncomp` components each, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    ncomp: usize,
    values: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid, ncomp: usize, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() * ncomp {
            return Err(FieldError::Length {
                expected: grid.len() * ncomp,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(k / ncomp.max(1)));
        }
        Ok(Self { grid, ncomp, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, flat: usize) -> &[f64] {
        &self.values[flat * self.ncomp..(flat + 1) * self.ncomp]
    }

    pub fn component(&self, c: usize) -> ScalarField {
        let values = self.values.iter().skip(c).step_by(self.ncomp).copied().collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Euclidean norm per node.
    pub fn norm(&self) -> ScalarField {
        let values = self
            .values
            .chunks(self.ncomp)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn interpolate_within(&self, p: &[f64], slack: f64) -> Result<Vec<f64>, FieldError> {
        (0..self.ncomp)
            .map(|c| interp::multilinear_strided(&self.grid, &self.values, c, self.ncomp, p, slack))
            .collect()
    }
}

/// Per-node symmetric matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    values: Vec<SymMat>,
}

impl MatrixField {
    pub fn new(grid: Grid, values: Vec<SymMat>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|m| !m.is_finite()) {
            return Err(FieldError::NonFinite(k));
        }
        if let Some(m) = values.iter().find(|m| m.dim() != grid.dim()) {
            return Err(FieldError::Arity {
                expected: grid.dim(),
                got: m.dim(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> SymMat) -> Result<Self, FieldError> {
        let dim = grid.dim();
        let values = (0..grid.len()).map(|k| f(&grid.coord(k)[..dim])).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[SymMat] {
        &self.values
    }

    #[inline]
    pub fn at(&self, flat: usize) -> &SymMat {
        &self.values[flat]
    }

    pub fn entry(&self, i: usize, j: usize) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|m| m.get(i, j)).collect(),
        }
    }

    /// Ascending eigenvalues per node, as a vector field with `dim` components.
    pub fn eigenvalues(&self) -> VectorField {
        let dim = self.grid.dim();
        let mut values = Vec::with_capacity(self.values.len() * dim);
        for m in &self.values {
            values.extend_from_slice(sym_eigen(m).values());
        }
        VectorField {
            grid: self.grid.clone(),
            ncomp: dim,
            values,
        }
    }

    /// Multilinear interpolation of every entry at `p`.
    pub fn interpolate_within(&self, p: &[f64], slack: f64) -> Result<SymMat, FieldError> {
        let dim = self.grid.dim();
        let flat: Vec<f64> = self.values.iter().flat_map(|m| m.upper_triangle()).collect();
        let ncomp = SymMat::triangle_len(dim);
        let entries = (0..ncomp)
            .map(|c| interp::multilinear_strided(&self.grid, &flat, c, ncomp, p, slack))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SymMat::from_upper_triangle(dim, &entries).expect("triangle length matches"))
    }
}
