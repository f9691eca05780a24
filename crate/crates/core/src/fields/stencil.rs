//! Second-order finite differences: central in the interior, one-sided at the
//! boundary. Both are exact on polynomials of degree two.

use super::{Grid, MatrixField, ScalarField, SymMat, VectorField, MAX_DIM};

/// First derivative along `axis` at node `flat`.
#[inline]
pub(crate) fn d1(grid: &Grid, v: &[f64], flat: usize, axis: usize) -> f64 {
    let n = grid.shape()[axis];
    let st = grid.stride(axis);
    let i = grid.multi_index(flat)[axis];
    let h = grid.spacing();
    if i == 0 {
        (-3.0 * v[flat] + 4.0 * v[flat + st] - v[flat + 2 * st]) / (2.0 * h)
    } else if i + 1 == n {
        (3.0 * v[flat] - 4.0 * v[flat - st] + v[flat - 2 * st]) / (2.0 * h)
    } else {
        (v[flat + st] - v[flat - st]) / (2.0 * h)
    }
}

/// Second derivative along `axis` at node `flat`.
#[inline]
pub(crate) fn d2(grid: &Grid, v: &[f64], flat: usize, axis: usize) -> f64 {
    let n = grid.shape()[axis];
    let st = grid.stride(axis);
    let i = grid.multi_index(flat)[axis];
    let h2 = grid.spacing().powi(2);
    let one_sided = |f0: f64, f1: f64, f2: f64, f3: Option<f64>| match f3 {
        Some(f3) => (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / h2,
        None => (f0 - 2.0 * f1 + f2) / h2,
    };
    if i == 0 {
        let f3 = (n >= 4).then(|| v[flat + 3 * st]);
        one_sided(v[flat], v[flat + st], v[flat + 2 * st], f3)
    } else if i + 1 == n {
        let f3 = (n >= 4).then(|| v[flat - 3 * st]);
        one_sided(v[flat], v[flat - st], v[flat - 2 * st], f3)
    } else {
        (v[flat + st] - 2.0 * v[flat] + v[flat - st]) / h2
    }
}

/// Gradient field, `dim` components per node.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let dim = grid.dim();
    let mut out = Vec::with_capacity(grid.len() * dim);
    for k in 0..grid.len() {
        for axis in 0..dim {
            out.push(d1(grid, f.values(), k, axis));
        }
    }
    VectorField::new(grid.clone(), dim, out).expect("finite input gives finite differences")
}

/// Hessian field. Mixed entries are the composition of two first-derivative
/// stencils, which reduces to the four-point cross difference in the interior.
pub fn hessian(f: &ScalarField) -> MatrixField {
    let grid = f.grid();
    let dim = grid.dim();
    let partials: Vec<Vec<f64>> = (0..dim)
        .map(|axis| (0..grid.len()).map(|k| d1(grid, f.values(), k, axis)).collect())
        .collect();
    let values = (0..grid.len())
        .map(|k| {
            SymMat::from_fn(dim, |i, j| {
                if i == j {
                    d2(grid, f.values(), k, i)
                } else {
                    d1(grid, &partials[j], k, i)
                }
            })
        })
        .collect();
    MatrixField::new(grid.clone(), values).expect("finite input gives finite differences")
}

/// Hessian at a single interior node using central differences only.
pub fn hessian_at(grid: &Grid, v: &[f64], flat: usize) -> SymMat {
    let dim = grid.dim();
    let h2 = grid.spacing().powi(2);
    let mut m = SymMat::zeros(dim);
    let st: [usize; MAX_DIM] = [grid.stride(0), grid.stride(1.min(dim - 1)), grid.stride(2.min(dim - 1))];
    for i in 0..dim {
        m.set(i, i, (v[flat + st[i]] - 2.0 * v[flat] + v[flat - st[i]]) / h2);
        for j in i + 1..dim {
            let pp = v[flat + st[i] + st[j]];
            let pm = v[flat + st[i] - st[j]];
            let mp = v[flat - st[i] + st[j]];
            let mm = v[flat - st[i] - st[j]];
            m.set(i, j, (pp - pm - mp + mm) / (4.0 * h2));
        }
    }
    m
}
