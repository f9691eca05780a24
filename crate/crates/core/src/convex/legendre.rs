//! Discrete Legendre–Fenchel transform.
//!
//! The 1D transform walks the lower convex hull of the samples once, so a
//! full line costs `O(n + m)` for `n` samples and `m` sorted slopes. Where the
//! samples around the maximizer are smooth and convex, the maximum is refined
//! on the local cubic interpolant; at kinks the exact hull value is kept. The
//! nD transform applies the 1D one along each axis in turn.

use crate::fields::{FieldError, Grid, ScalarField, MAX_DIM};

/// Largest ratio between neighbouring second differences accepted as smooth.
const SMOOTHNESS_RATIO: f64 = 4.0;

/// Indices of the lower convex hull of `(k, f[k])`.
pub(crate) fn lower_hull(f: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(f.len());
    for k in 0..f.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b - a) as f64 * (f[k] - f[a]) - (f[b] - f[a]) * (k - a) as f64;
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

/// `out[j] = sup_x (x·slopes[j] − f(x))` for samples `f[k]` at `x0 + k·h`.
/// `slopes` must be ascending.
pub(crate) fn conjugate_line(x0: f64, h: f64, f: &[f64], slopes: &[f64], out: &mut [f64]) {
    debug_assert!(slopes.windows(2).all(|w| w[0] <= w[1]));
    let hull = lower_hull(f);
    let chord = |a: usize, b: usize| (f[b] - f[a]) / ((b - a) as f64 * h);
    let mut j = 0;
    for (o, &s) in out.iter_mut().zip(slopes) {
        while j + 1 < hull.len() && chord(hull[j], hull[j + 1]) < s {
            j += 1;
        }
        let k = hull[j];
        let discrete = (x0 + k as f64 * h) * s - f[k];
        *o = refine(x0, h, f, k, s).map_or(discrete, |v| v.max(discrete));
    }
}

/// Maximizes `x·s − p(x)` for the cubic `p` interpolating four samples around
/// the discrete maximizer `k`. `None` when the samples do not look smooth.
fn refine(x0: f64, h: f64, f: &[f64], k: usize, s: f64) -> Option<f64> {
    let n = f.len();
    if n < 4 {
        return None;
    }
    let d2 = |m: usize| f[m - 1] - 2.0 * f[m] + f[m + 1];
    // Offset of the quadratic maximizer from node k, in units of h.
    let offset = if k > 0 && k + 1 < n && d2(k) > 0.0 {
        let slope = (f[k + 1] - f[k - 1]) / (2.0 * h);
        ((s - slope) * h / d2(k)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let preferred = if offset >= 0.0 { k as isize - 1 } else { k as isize - 2 };
    let start = preferred.clamp(0, n as isize - 4) as usize;
    let (a, b) = (d2(start + 1), d2(start + 2));
    if a <= 0.0 || b <= 0.0 || a.max(b) > SMOOTHNESS_RATIO * a.min(b) {
        return None;
    }
    // Newton form on t = (x − x_start)/h with nodes t = 0, 1, 2, 3.
    let p = [f[start], f[start + 1], f[start + 2], f[start + 3]];
    let d1 = p[1] - p[0];
    let dd2 = p[2] - 2.0 * p[1] + p[0];
    let dd3 = p[3] - 3.0 * p[2] + 3.0 * p[1] - p[0];
    let value = |t: f64| p[0] + t * d1 + 0.5 * t * (t - 1.0) * dd2 + t * (t - 1.0) * (t - 2.0) / 6.0 * dd3;
    let deriv = |t: f64| d1 + (t - 0.5) * dd2 + (3.0 * t * t - 6.0 * t + 2.0) / 6.0 * dd3;
    let curv = |t: f64| dd2 + (t - 1.0) * dd3;
    let tk = (k - start) as f64;
    let (lo, hi) = ((tk - 1.0).max(0.0), (tk + 1.0).min(3.0));
    let mut t = (tk + offset).clamp(lo, hi);
    for _ in 0..8 {
        let c = curv(t);
        if c <= 0.0 {
            return None;
        }
        let step = (deriv(t) - s * h) / c;
        t = (t - step).clamp(lo, hi);
        if step.abs() < 1e-14 {
            break;
        }
    }
    Some((x0 + (start as f64 + t) * h) * s - value(t))
}

/// Discrete conjugate of `values` sampled on `src`, evaluated on the nodes of
/// `dual`, by one 1D transform per axis.
pub(crate) fn conjugate_grid(src: &Grid, values: &[f64], dual: &Grid) -> Vec<f64> {
    let dim = src.dim();
    debug_assert_eq!(dim, dual.dim());
    let mut shape: Vec<usize> = src.shape().to_vec();
    let mut cur = values.to_vec();
    for (step, axis) in (0..dim).rev().enumerate() {
        let mut next_shape = shape.clone();
        next_shape[axis] = dual.shape()[axis];
        let cur_strides = strides(&shape);
        let next_strides = strides(&next_shape);
        let slopes: Vec<f64> = (0..dual.shape()[axis])
            .map(|j| dual.origin()[axis] + j as f64 * dual.spacing())
            .collect();
        let mut next = vec![0.0; next_shape.iter().product()];
        let mut line = vec![0.0; shape[axis]];
        let mut out = vec![0.0; next_shape[axis]];
        // Lines are enumerated by every index combination with idx[axis] == 0.
        let others: usize = shape.iter().enumerate().filter(|(a, _)| *a != axis).map(|(_, n)| n).product();
        for l in 0..others {
            let mut rem = l;
            let mut cur_base = 0;
            let mut next_base = 0;
            for a in (0..dim).rev() {
                if a == axis {
                    continue;
                }
                let i = rem % shape[a];
                rem /= shape[a];
                cur_base += i * cur_strides[a];
                next_base += i * next_strides[a];
            }
            for (k, v) in line.iter_mut().enumerate() {
                // Later stages see −W so that the sup composes across axes.
                let raw = cur[cur_base + k * cur_strides[axis]];
                *v = if step == 0 { raw } else { -raw };
            }
            conjugate_line(src.origin()[axis], src.spacing(), &line, &slopes, &mut out);
            for (j, &w) in out.iter().enumerate() {
                next[next_base + j * next_strides[axis]] = w;
            }
        }
        cur = next;
        shape = next_shape;
    }
    cur
}

fn strides(shape: &[usize]) -> [usize; MAX_DIM] {
    let mut st = [0; MAX_DIM];
    let mut acc = 1;
    for a in (0..shape.len()).rev() {
        st[a] = acc;
        acc *= shape[a];
    }
    st
}

/// Per-axis `[min, max]` of the one-sided difference quotients of `f`.
pub fn slope_range(f: &ScalarField) -> Vec<(f64, f64)> {
    let grid = f.grid();
    let h = grid.spacing();
    (0..grid.dim())
        .map(|axis| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for k in 0..grid.len() {
                if let Some(next) = grid.step(k, axis, 1) {
                    let s = (f.value(next) - f.value(k)) / h;
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
            }
            (lo, hi)
        })
        .collect()
}

/// Isotropic grid over the slope box of `f`.
///
/// The widest axis keeps the node count of the source axis; narrower axes get
/// proportionally fewer nodes (at least three), centred on their slope range.
pub fn auto_dual_grid(f: &ScalarField) -> Result<Grid, FieldError> {
    let grid = f.grid();
    let ranges = slope_range(f);
    let spacing = ranges
        .iter()
        .zip(grid.shape())
        .map(|(&(lo, hi), &n)| (hi - lo) / (n - 1) as f64)
        .fold(0.0, f64::max);
    if !(spacing > 0.0) {
        return Err(FieldError::Spacing(spacing));
    }
    let mut origin = Vec::with_capacity(grid.dim());
    let mut shape = Vec::with_capacity(grid.dim());
    for &(lo, hi) in &ranges {
        let n = (((hi - lo) / spacing + 1e-9).floor() as usize + 1).max(3);
        let mid = 0.5 * (lo + hi);
        origin.push(mid - 0.5 * (n - 1) as f64 * spacing);
        shape.push(n);
    }
    Grid::new(origin, spacing, shape)
}

/// Lower convex envelope of 1D samples, evaluated at the nodes.
pub(crate) fn envelope_line(f: &[f64]) -> Vec<f64> {
    let hull = lower_hull(f);
    let mut out = vec![0.0; f.len()];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (k, o) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            let t = (k - a) as f64 / (b - a) as f64;
            *o = (1.0 - t) * f[a] + t * f[b];
        }
    }
    if hull.len() == 1 {
        out[0] = f[0];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(x0: f64, h: f64, f: &[f64], s: f64) -> f64 {
        f.iter()
            .enumerate()
            .map(|(k, &v)| (x0 + k as f64 * h) * s - v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn hull_of_convex_samples_keeps_every_point() {
        let f: Vec<f64> = (0..10).map(|k| (k as f64 - 4.5).powi(2)).collect();
        assert_eq!(lower_hull(&f).len(), 10);
    }

    #[test]
    fn hull_skips_concave_bumps() {
        let f = [0.0, 2.0, 1.0, 3.0, 0.0];
        assert_eq!(lower_hull(&f), vec![0, 4]);
    }

    #[test]
    fn piecewise_linear_data_is_exact() {
        // |x| has a kink on a node: the refinement must stand down.
        let h = 0.05;
        let f: Vec<f64> = (0..41).map(|k| (-1.0 + k as f64 * h).abs()).collect();
        let slopes: Vec<f64> = (0..21).map(|j| -1.0 + 0.1 * j as f64).collect();
        let mut out = vec![0.0; slopes.len()];
        conjugate_line(-1.0, h, &f, &slopes, &mut out);
        for (&s, &v) in slopes.iter().zip(&out) {
            assert!((v - brute(-1.0, h, &f, s)).abs() < 1e-12, "slope {s}");
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn refined_transform_beats_grid_sup_on_smooth_data() {
        let h = 0.1;
        let f: Vec<f64> = (0..41).map(|k| {
            let x = -2.0 + k as f64 * h;
            0.5 * x * x + 0.1 * x.powi(4)
        }).collect();
        let slopes: Vec<f64> = (0..31).map(|j| -1.5 + 0.1 * j as f64).collect();
        let mut out = vec![0.0; slopes.len()];
        conjugate_line(-2.0, h, &f, &slopes, &mut out);
        for (&s, &v) in slopes.iter().zip(&out) {
            // Fine brute force as the reference.
            let fine: f64 = (0..40001)
                .map(|k| {
                    let x = -2.0 + k as f64 * 1e-4;
                    x * s - (0.5 * x * x + 0.1 * x.powi(4))
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((v - fine).abs() < 1e-5, "slope {s}: {v} vs {fine}");
            assert!(v >= brute(-2.0, h, &f, s) - 1e-15);
        }
    }

    #[test]
    fn envelope_of_double_well_is_flat_between_minima() {
        let h = 0.1;
        let f: Vec<f64> = (0..41).map(|k| {
            let x = -2.0 + k as f64 * h;
            (x * x - 1.0).powi(2)
        }).collect();
        let env = envelope_line(&f);
        for k in 10..=30 {
            assert!(env[k].abs() < 1e-12);
        }
        assert_eq!(env[0], f[0]);
    }
}
