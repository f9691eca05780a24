use super::{FieldError, Grid, ScalarField, MAX_DIM};

pub(crate) fn multilinear(grid: &Grid, values: &[f64], p: &[f64], slack: f64) -> Result<f64, FieldError> {
    multilinear_strided(grid, values, 0, 1, p, slack)
}

/// Multilinear interpolation of component `comp` of an interleaved array with
/// `ncomp` entries per node.
pub(crate) fn multilinear_strided(
    grid: &Grid,
    values: &[f64],
    comp: usize,
    ncomp: usize,
    p: &[f64],
    slack: f64,
) -> Result<f64, FieldError> {
    let dim = grid.dim();
    if p.len() < dim {
        return Err(FieldError::Arity {
            expected: dim,
            got: p.len(),
        });
    }
    if grid.inset(p) < -slack {
        return Err(FieldError::OutOfDomain(p[..dim].to_vec()));
    }
    let h = grid.spacing();
    let mut base = [0usize; MAX_DIM];
    let mut weight = [0.0; MAX_DIM];
    for axis in 0..dim {
        let n = grid.shape()[axis];
        let t = ((p[axis] - grid.origin()[axis]) / h).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        base[axis] = i;
        weight[axis] = t - i as f64;
    }
    let origin = grid.flat(&base);
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut flat = origin;
        for axis in 0..dim {
            if corner >> axis & 1 == 1 {
                w *= weight[axis];
                flat += grid.stride(axis);
            } else {
                w *= 1.0 - weight[axis];
            }
        }
        if w != 0.0 {
            acc += w * values[flat * ncomp + comp];
        }
    }
    Ok(acc)
}

pub(crate) fn cubic(grid: &Grid, values: &[f64], p: &[f64], slack: f64) -> Result<f64, FieldError> {
    let dim = grid.dim();
    if p.len() < dim {
        return Err(FieldError::Arity {
            expected: dim,
            got: p.len(),
        });
    }
    if grid.shape().iter().any(|&n| n < 4) {
        return multilinear(grid, values, p, slack);
    }
    if grid.inset(p) < -slack {
        return Err(FieldError::OutOfDomain(p[..dim].to_vec()));
    }
    let h = grid.spacing();
    let mut base = [0usize; MAX_DIM];
    let mut weights = [[0.0; 4]; MAX_DIM];
    for axis in 0..dim {
        let n = grid.shape()[axis];
        let t = ((p[axis] - grid.origin()[axis]) / h).clamp(0.0, (n - 1) as f64);
        let i0 = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        base[axis] = i0;
        let s = t - i0 as f64;
        weights[axis] = [
            -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
            s * (s - 2.0) * (s - 3.0) / 2.0,
            -s * (s - 1.0) * (s - 3.0) / 2.0,
            s * (s - 1.0) * (s - 2.0) / 6.0,
        ];
    }
    let origin = grid.flat(&base);
    let mut acc = 0.0;
    for corner in 0..(1usize << (2 * dim)) {
        let mut w = 1.0;
        let mut flat = origin;
        for axis in 0..dim {
            let o = corner >> (2 * axis) & 3;
            w *= weights[axis][o];
            flat += o * grid.stride(axis);
        }
        acc += w * values[flat];
    }
    Ok(acc)
}

/// Copies the nodes of the inclusive index box `lo..=hi`.
pub fn restrict(f: &ScalarField, lo: &[usize], hi: &[usize]) -> Result<ScalarField, FieldError> {
    let grid = f.grid();
    let dim = grid.dim();
    if lo.len() != dim || hi.len() != dim {
        return Err(FieldError::Arity {
            expected: dim,
            got: lo.len().min(hi.len()),
        });
    }
    for axis in 0..dim {
        if lo[axis] > hi[axis] || hi[axis] >= grid.shape()[axis] {
            let p: Vec<f64> = hi.iter().map(|&i| i as f64).collect();
            return Err(FieldError::OutOfDomain(p));
        }
    }
    let origin = (0..dim)
        .map(|a| grid.origin()[a] + lo[a] as f64 * grid.spacing())
        .collect();
    let shape: Vec<usize> = (0..dim).map(|a| hi[a] - lo[a] + 1).collect();
    let sub = Grid::new(origin, grid.spacing(), shape)?;
    let values = (0..sub.len())
        .map(|k| {
            let mut idx = sub.multi_index(k);
            for axis in 0..dim {
                idx[axis] += lo[axis];
            }
            f.value(grid.flat(&idx))
        })
        .collect();
    ScalarField::new(sub, values)
}

/// Samples `f` on `target` by multilinear interpolation.
pub fn resample(f: &ScalarField, target: &Grid) -> Result<ScalarField, FieldError> {
    if target.dim() != f.grid().dim() {
        return Err(FieldError::Arity {
            expected: f.grid().dim(),
            got: target.dim(),
        });
    }
    let dim = target.dim();
    let values = (0..target.len())
        .map(|k| f.interpolate(&target.coord(k)[..dim]))
        .collect::<Result<Vec<_>, _>>()?;
    ScalarField::new(target.clone(), values)
}
