//! Discrete convex analysis on grids: convexity certificates, the Legendre
//! transform, subdifferential boxes and the strict-convexity distance bound.

mod legendre;

pub use legendre::{auto_dual_grid, slope_range};
pub(crate) use legendre::conjugate_grid;

use crate::fields::{hessian_at, sym_eigen, FieldError, Grid, ScalarField};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexError {
    #[error("potential is not convex: discrete Hessian eigenvalue {min_eigenvalue:.3e} at node {node} (tolerance {tolerance:.3e})")]
    NotConvex {
        node: usize,
        min_eigenvalue: f64,
        tolerance: f64,
    },
    #[error("slope {slope:?} is not in the subdifferential at node {node} (tolerance {tolerance:.3e})")]
    SlopeNotInSubdifferential {
        node: usize,
        slope: Vec<f64>,
        tolerance: f64,
    },
    #[error("operation supports dimension {supported} only, got {got}")]
    Dimension { supported: usize, got: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Slack allowed on discrete Hessian eigenvalues of a convex potential: `10 h²`.
pub fn convexity_tolerance(grid: &Grid) -> f64 {
    10.0 * grid.spacing().powi(2)
}

/// Outcome of [`convexity_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexityVerdict {
    Certified {
        min_eigenvalue: f64,
        tolerance: f64,
    },
    Violated {
        /// Node with the most negative discrete Hessian eigenvalue.
        node: usize,
        min_eigenvalue: f64,
        tolerance: f64,
        violations: usize,
    },
}

impl ConvexityVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Self::Certified { .. })
    }
}

/// Certifies that the smallest eigenvalue of the central-difference Hessian is
/// at least `−10 h²` at every interior node.
pub fn convexity_check(f: &ScalarField) -> ConvexityVerdict {
    let grid = f.grid();
    let tolerance = convexity_tolerance(grid);
    let mut worst = (usize::MAX, f64::INFINITY);
    let mut violations = 0;
    for k in grid.interior() {
        let lambda = sym_eigen(&hessian_at(grid, f.values(), k)).min();
        if lambda < -tolerance {
            violations += 1;
        }
        if lambda < worst.1 {
            worst = (k, lambda);
        }
    }
    if violations == 0 {
        ConvexityVerdict::Certified {
            min_eigenvalue: worst.1,
            tolerance,
        }
    } else {
        ConvexityVerdict::Violated {
            node: worst.0,
            min_eigenvalue: worst.1,
            tolerance,
            violations,
        }
    }
}

/// A scalar field together with the outcome of its convexity certification.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPotential {
    field: ScalarField,
    certified: bool,
}

impl ConvexPotential {
    /// Runs [`convexity_check`] and rejects the field with its worst node on failure.
    pub fn certify(field: ScalarField) -> Result<Self, ConvexError> {
        match convexity_check(&field) {
            ConvexityVerdict::Certified { .. } => Ok(Self {
                field,
                certified: true,
            }),
            ConvexityVerdict::Violated {
                node,
                min_eigenvalue,
                tolerance,
                ..
            } => Err(ConvexError::NotConvex {
                node,
                min_eigenvalue,
                tolerance,
            }),
        }
    }

    /// Wraps a field without checking it. Consumers that need convexity will
    /// run the check themselves.
    pub fn uncertified(field: ScalarField) -> Self {
        Self {
            field,
            certified: false,
        }
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Certified copy, re-checking if needed.
    pub(crate) fn ensure_certified(&self) -> Result<(), ConvexError> {
        if self.certified {
            Ok(())
        } else {
            Self::certify(self.field.clone()).map(|_| ())
        }
    }
}

/// Samples of `f*` on a grid in slope space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSamples {
    pub field: ScalarField,
    pub certified: bool,
}

/// Legendre transform `f*(x̄) = sup_x [x·x̄ − f(x)]` of a convex potential on
/// the nodes of `dual`, or of [`auto_dual_grid`] when `dual` is `None`.
pub fn legendre(f: &ConvexPotential, dual: Option<&Grid>) -> Result<DualSamples, ConvexError> {
    f.ensure_certified()?;
    let src = f.field().grid();
    let dual = match dual {
        Some(g) if g.dim() != src.dim() => {
            return Err(ConvexError::Dimension {
                supported: src.dim(),
                got: g.dim(),
            })
        }
        Some(g) => g.clone(),
        None => auto_dual_grid(f.field())?,
    };
    let values = conjugate_grid(src, f.field().values(), &dual);
    let field = ScalarField::new(dual, values)?;
    let certified = convexity_check(&field).is_certified();
    Ok(DualSamples { field, certified })
}

/// Sup-norm distance between the discrete biconjugate `f**` and the lower
/// convex envelope of `f`, over interior nodes. One-dimensional fields only.
pub fn biconjugate_check(f: &ScalarField) -> Result<f64, ConvexError> {
    let grid = f.grid();
    if grid.dim() != 1 {
        return Err(ConvexError::Dimension {
            supported: 1,
            got: grid.dim(),
        });
    }
    let dual = auto_dual_grid(f)?;
    let fstar = conjugate_grid(grid, f.values(), &dual);
    let fss = conjugate_grid(&dual, &fstar, grid);
    let env = legendre::envelope_line(f.values());
    Ok(grid
        .interior()
        .map(|k| (fss[k] - env[k]).abs())
        .fold(0.0, f64::max))
}

/// Lower convex envelope of a 1D field.
pub fn convex_envelope(f: &ScalarField) -> Result<ScalarField, ConvexError> {
    if f.grid().dim() != 1 {
        return Err(ConvexError::Dimension {
            supported: 1,
            got: f.grid().dim(),
        });
    }
    Ok(ScalarField::new(f.grid().clone(), legendre::envelope_line(f.values()))?)
}

/// Per-axis interval approximation of `∂f` at a node: backward and forward
/// difference quotients. On the domain boundary the outward side is unbounded
/// and the axis is flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdifferentialBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub one_sided: Vec<bool>,
}

impl SubdifferentialBox {
    pub fn contains(&self, slope: &[f64], tolerance: f64) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(slope)
            .all(|((&lo, &hi), &s)| s >= lo - tolerance && s <= hi + tolerance)
    }

    pub fn is_one_sided(&self) -> bool {
        self.one_sided.iter().any(|&b| b)
    }
}

pub fn subdifferential(f: &ConvexPotential, node: usize) -> SubdifferentialBox {
    let field = f.field();
    let grid = field.grid();
    let h = grid.spacing();
    let dim = grid.dim();
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    let mut one_sided = Vec::with_capacity(dim);
    for axis in 0..dim {
        let back = grid.step(node, axis, -1).map(|m| (field.value(node) - field.value(m)) / h);
        let fwd = grid.step(node, axis, 1).map(|m| (field.value(m) - field.value(node)) / h);
        lower.push(back.unwrap_or(f64::NEG_INFINITY));
        upper.push(fwd.unwrap_or(f64::INFINITY));
        one_sided.push(back.is_none() || fwd.is_none());
    }
    SubdifferentialBox {
        lower,
        upper,
        one_sided,
    }
}

/// Slope-membership tolerance `h^{1/2}`.
pub fn slope_tolerance(grid: &Grid) -> f64 {
    grid.spacing().sqrt()
}

/// Node maximizing `x·slope − f(x)`, i.e. a discrete point whose subdifferential
/// contains `slope`.
pub fn slope_preimage(f: &ScalarField, slope: &[f64]) -> usize {
    let grid = f.grid();
    let dim = grid.dim();
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..grid.len() {
        let x = grid.coord(k);
        let v = (0..dim).map(|a| x[a] * slope[a]).sum::<f64>() - f.value(k);
        if v > best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// Residual `2√2 (|ũ−ṽ|(a) + |ũ−ṽ|(b)) − |b − a|²` of the distance bound for
/// points `a`, `b` sharing the slope `slope` in their subdifferentials.
/// Nonnegative whenever both potentials are strictly convex with modulus at
/// least `1/√2`.
pub fn strict_convexity_gap(
    u: &ConvexPotential,
    v: &ConvexPotential,
    a: usize,
    b: usize,
    slope: &[f64],
) -> Result<f64, ConvexError> {
    let grid = u.field().grid();
    if grid != v.field().grid() {
        return Err(FieldError::GridMismatch.into());
    }
    let tolerance = slope_tolerance(grid);
    for (pot, node) in [(u, a), (v, b)] {
        if !subdifferential(pot, node).contains(slope, tolerance) {
            return Err(ConvexError::SlopeNotInSubdifferential {
                node,
                slope: slope.to_vec(),
                tolerance,
            });
        }
    }
    let dim = grid.dim();
    let (pa, pb) = (grid.coord(a), grid.coord(b));
    let dist2: f64 = (0..dim).map(|i| (pb[i] - pa[i]).powi(2)).sum();
    let diff = |k: usize| (u.field().value(k) - v.field().value(k)).abs();
    Ok(2.0 * std::f64::consts::SQRT_2 * (diff(a) + diff(b)) - dist2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> ScalarField {
        let g = Grid::cube(1, lo, hi, n).unwrap();
        ScalarField::from_fn(&g, |x| f(x[0])).unwrap()
    }

    #[test]
    fn certifies_paraboloid_and_rejects_concave() {
        let g = Grid::cube(2, -1.0, 1.0, 11).unwrap();
        let bowl = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        assert!(convexity_check(&bowl).is_certified());
        let cap = ScalarField::from_fn(&g, |x| -(x[0] * x[0] + x[1] * x[1])).unwrap();
        match convexity_check(&cap) {
            ConvexityVerdict::Violated { violations, .. } => assert_eq!(violations, 81),
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn quartic_with_small_dip_is_rejected_then_repaired() {
        // f'' = 12x² − 0.02 < 0 near the origin; adding c·0.01x²/2 with c = 2
        // makes f'' = 12x² ≥ 0.
        let f = line(-1.0, 1.0, 201, |x| x.powi(4) - 0.01 * x * x);
        match convexity_check(&f) {
            ConvexityVerdict::Violated { node, .. } => {
                let x = f.grid().coord(node)[0];
                assert!(x.abs() < 0.05, "violation at {x}");
            }
            v => panic!("unexpected {v:?}"),
        }
        let fixed = line(-1.0, 1.0, 201, |x| x.powi(4) - 0.01 * x * x + 2.0 * 0.01 * x * x / 2.0);
        assert!(convexity_check(&fixed).is_certified());
    }

    #[test]
    fn legendre_rejects_nonconvex_input() {
        let f = line(-1.0, 1.0, 21, |x| -x * x);
        let err = legendre(&ConvexPotential::uncertified(f), None).unwrap_err();
        assert!(matches!(err, ConvexError::NotConvex { .. }));
    }

    #[test]
    fn subdifferential_of_abs_at_kink() {
        let h = 0.01;
        let f = ConvexPotential::certify(line(-1.0, 1.0, 201, f64::abs)).unwrap();
        let b = subdifferential(&f, 100);
        assert!((b.lower[0] + 1.0).abs() <= h && (b.upper[0] - 1.0).abs() <= h);
        assert!(!b.is_one_sided());
    }

    #[test]
    fn subdifferential_of_ramp_at_kink() {
        let f = ConvexPotential::certify(line(-1.0, 1.0, 201, |x| x.max(0.0))).unwrap();
        let b = subdifferential(&f, 100);
        assert!(b.lower[0].abs() <= 0.01 && (b.upper[0] - 1.0).abs() <= 0.01);
    }

    #[test]
    fn subdifferential_at_smooth_point_brackets_gradient() {
        let h = 0.01;
        let f = ConvexPotential::certify(line(-1.0, 1.0, 201, |x| 0.5 * x * x)).unwrap();
        let node = 150; // x = 0.5
        let b = subdifferential(&f, node);
        assert!(b.lower[0] >= 0.5 - h && b.upper[0] <= 0.5 + h);
        assert!(b.contains(&[0.5], 0.0));
    }

    #[test]
    fn boundary_subdifferential_is_flagged() {
        let f = ConvexPotential::certify(line(-1.0, 1.0, 21, |x| x * x)).unwrap();
        let b = subdifferential(&f, 0);
        assert!(b.is_one_sided());
        assert_eq!(b.lower[0], f64::NEG_INFINITY);
    }

    #[test]
    fn identical_potentials_give_zero_gap() {
        let f = ConvexPotential::certify(line(-1.0, 1.0, 41, |x| x * x)).unwrap();
        let slope = [2.0 * 0.5];
        let a = slope_preimage(f.field(), &slope);
        let r = strict_convexity_gap(&f, &f, a, a, &slope).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn gap_precondition_is_enforced() {
        let f = ConvexPotential::certify(line(-1.0, 1.0, 41, |x| x * x)).unwrap();
        let err = strict_convexity_gap(&f, &f, 20, 20, &[1.5]).unwrap_err();
        assert!(matches!(err, ConvexError::SlopeNotInSubdifferential { node: 20, .. }));
    }
}
