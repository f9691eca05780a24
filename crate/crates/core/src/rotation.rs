//! Rotation of the graph of `Du` by an angle `α` in `ℝⁿ × ℝⁿ`.
//!
//! With `c = cos α`, `s = sin α` and `ũ = s·u + (c/2)|x|²`, the rotated
//! potential is `ū(x̄) = ((c/2)|x̄|² − ũ*(x̄)) / s`. Points move by
//! `x̄ = c·x + s·Du(x)` and back by `x = c·x̄ − s·Dū(x̄)`, and Hessian angles
//! drop by `α`: `arctan λ̄ = arctan λ − α`.

use std::f64::consts::FRAC_PI_4;

use crate::convex::{auto_dual_grid, conjugate_grid, ConvexError, ConvexPotential};
use crate::fields::{
    gradient, hessian, hessian_at, sym_eigen, FieldError, Grid, MatrixField, ScalarField, SymMat,
    VectorField, MAX_DIM,
};
use crate::operator::{PhaseField, Regularity};
use thiserror::Error;

/// Denominators `1 − λ̄·tan α` at or below this are treated as singular.
pub const EPS_CLAMP: f64 = 1e-8;

/// Margin below `λ̄ = 1` required before rotating back up.
pub const UPWARD_MARGIN: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationError {
    #[error("rotation angle {0} is outside (0, π/2)")]
    Angle(f64),
    #[error("rotated Hessian eigenvalue {value:.6} at dual node {node} leaves [-1, 1] by more than {tolerance:.3e}")]
    BoundViolation { node: usize, value: f64, tolerance: f64 },
    #[error("eigenvalue {value} is singular for the inverse law (1 - λ̄ tan α = {denominator:.3e})")]
    Singular { value: f64, denominator: f64 },
    #[error("potentials are not ordered: u - v = {excess:.3e} at node {node}")]
    NotOrdered { node: usize, excess: f64 },
    #[error("largest rotated eigenvalue {max:.6} is within {margin} of 1; rotating back is ill-conditioned")]
    UpwardDomain { max: f64, margin: f64 },
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// An angle in `(0, π/2)` with its cosine and sine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngle {
    alpha: f64,
    c: f64,
    s: f64,
}

impl Default for RotationAngle {
    fn default() -> Self {
        Self::quarter()
    }
}

impl RotationAngle {
    pub fn new(alpha: f64) -> Result<Self, RotationError> {
        if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
            return Err(RotationError::Angle(alpha));
        }
        Ok(Self {
            alpha,
            c: alpha.cos(),
            s: alpha.sin(),
        })
    }

    /// `α = π/4`.
    pub fn quarter() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: FRAC_PI_4,
            c: r,
            s: r,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cos(&self) -> f64 {
        self.c
    }

    pub fn sin(&self) -> f64 {
        self.s
    }

    pub fn tan(&self) -> f64 {
        self.s / self.c
    }
}

/// `λ̄ = tan(arctan λ − α) = (λ − t)/(1 + λt)`, for `λ > −cot α`.
pub fn forward_hessian_law(lambda: f64, angle: RotationAngle) -> f64 {
    (angle.c * lambda - angle.s) / (angle.s * lambda + angle.c)
}

/// `λ = tan(arctan λ̄ + α) = (λ̄ + t)/(1 − λ̄t)`; at `α = π/4` this is
/// `(1 + λ̄)/(1 − λ̄)`.
pub fn inverse_hessian_law(lambda_bar: f64, angle: RotationAngle) -> Result<f64, RotationError> {
    let t = angle.tan();
    let denominator = 1.0 - lambda_bar * t;
    if !(denominator > EPS_CLAMP) {
        return Err(RotationError::Singular {
            value: lambda_bar,
            denominator,
        });
    }
    Ok((lambda_bar + t) / denominator)
}

/// [`inverse_hessian_law`] applied to the spectrum of `H̄`.
pub fn inverse_hessian_law_matrix(h_bar: &SymMat, angle: RotationAngle) -> Result<SymMat, RotationError> {
    let eig = sym_eigen(h_bar);
    for &l in eig.values() {
        inverse_hessian_law(l, angle)?;
    }
    Ok(h_bar.map_spectrum(|l| inverse_hessian_law(l, angle).expect("checked above")))
}

/// Spectrum range of `D²ū` over the interior dual nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBounds {
    pub min: f64,
    pub max: f64,
    pub tolerance: f64,
    pub checked: usize,
    pub violations: usize,
    /// Node and eigenvalue of the largest excursion outside `[-1, 1]`.
    pub worst: Option<(usize, f64)>,
}

impl HessianBounds {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// `ū` on a dual grid together with the reverse map and `D²ū`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedPotential {
    potential: ScalarField,
    angle: RotationAngle,
    source: Grid,
    reverse_map: VectorField,
    hessian: MatrixField,
    image: Vec<usize>,
    bounds: HessianBounds,
}

impl RotatedPotential {
    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    pub fn into_potential(self) -> ScalarField {
        self.potential
    }

    pub fn angle(&self) -> RotationAngle {
        self.angle
    }

    pub fn source_grid(&self) -> &Grid {
        &self.source
    }

    /// `x(x̄) = c·x̄ − s·Dū(x̄)` at every dual node.
    pub fn reverse_map(&self) -> &VectorField {
        &self.reverse_map
    }

    pub fn hessian(&self) -> &MatrixField {
        &self.hessian
    }

    /// Interior dual nodes whose preimage lies strictly inside the source box.
    /// Outside this set the dual grid only sees the boundary of the source.
    pub fn image_nodes(&self) -> &[usize] {
        &self.image
    }

    /// Image nodes whose preimage is at least `margin` inside the source box.
    pub fn image_nodes_within(&self, margin: f64) -> Vec<usize> {
        self.image
            .iter()
            .copied()
            .filter(|&j| self.source.inset(self.reverse_map.at(j)) >= margin)
            .collect()
    }

    pub fn bounds(&self) -> &HessianBounds {
        &self.bounds
    }
}

/// Tolerance on the rotated Hessian bounds: `10 h` for source spacing `h`.
pub fn bound_tolerance(source: &Grid) -> f64 {
    10.0 * source.spacing()
}

/// Rotates a certified convex potential and certifies `−1 ≤ λ̄ ≤ 1` at every
/// interior dual node.
pub fn rotate(u: &ConvexPotential, angle: RotationAngle) -> Result<RotatedPotential, RotationError> {
    u.ensure_certified()?;
    let r = rotate_unchecked(u.field(), angle)?;
    match r.bounds.worst {
        Some((node, value)) if r.bounds.violations > 0 => Err(RotationError::BoundViolation {
            node,
            value,
            tolerance: r.bounds.tolerance,
        }),
        _ => Ok(r),
    }
}

/// Rotation without the convexity certificate or the bound check. The dual
/// grid covers the slope box of `ũ`.
pub fn rotate_unchecked(u: &ScalarField, angle: RotationAngle) -> Result<RotatedPotential, RotationError> {
    let tilde = lift(u, angle)?;
    let dual = auto_dual_grid(&tilde)?;
    rotate_lifted(u.grid(), &tilde, angle, dual)
}

/// Rotation onto a caller-chosen dual grid.
pub fn rotate_on(u: &ScalarField, angle: RotationAngle, dual: &Grid) -> Result<RotatedPotential, RotationError> {
    if dual.dim() != u.grid().dim() {
        return Err(FieldError::Arity {
            expected: u.grid().dim(),
            got: dual.dim(),
        }
        .into());
    }
    let tilde = lift(u, angle)?;
    rotate_lifted(u.grid(), &tilde, angle, dual.clone())
}

/// `ũ = s·u + (c/2)|x|²`.
fn lift(u: &ScalarField, angle: RotationAngle) -> Result<ScalarField, FieldError> {
    let grid = u.grid();
    let dim = grid.dim();
    let values = (0..grid.len())
        .map(|k| {
            let x = grid.coord(k);
            angle.s * u.value(k) + 0.5 * angle.c * norm2(&x[..dim])
        })
        .collect();
    ScalarField::new(grid.clone(), values)
}

fn rotate_lifted(
    source: &Grid,
    tilde: &ScalarField,
    angle: RotationAngle,
    dual: Grid,
) -> Result<RotatedPotential, RotationError> {
    let dim = dual.dim();
    let star = conjugate_grid(source, tilde.values(), &dual);
    let values = (0..dual.len())
        .map(|j| {
            let xb = dual.coord(j);
            (0.5 * angle.c * norm2(&xb[..dim]) - star[j]) / angle.s
        })
        .collect();
    let potential = ScalarField::new(dual.clone(), values)?;
    let grad = gradient(&potential);
    let map = (0..dual.len())
        .flat_map(|j| {
            let xb = dual.coord(j);
            let g = grad.at(j);
            (0..dim).map(move |a| angle.c * xb[a] - angle.s * g[a]).collect::<Vec<_>>()
        })
        .collect();
    let reverse_map = VectorField::new(dual.clone(), dim, map)?;
    let hessian = hessian(&potential);
    let image: Vec<usize> = dual
        .interior()
        .filter(|&j| source.inset(reverse_map.at(j)) > 0.0)
        .collect();
    let interior: Vec<usize> = dual.interior().collect();
    let bounds = measure_bounds(&hessian, &interior, bound_tolerance(source));
    Ok(RotatedPotential {
        potential,
        angle,
        source: source.clone(),
        reverse_map,
        hessian,
        image,
        bounds,
    })
}

fn measure_bounds(hessian: &MatrixField, nodes: &[usize], tolerance: f64) -> HessianBounds {
    let mut b = HessianBounds {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        tolerance,
        checked: nodes.len(),
        violations: 0,
        worst: None,
    };
    let mut worst_excess = 0.0;
    for &j in nodes {
        let eig = sym_eigen(hessian.at(j));
        let (lo, hi) = (eig.min(), eig.max());
        b.min = b.min.min(lo);
        b.max = b.max.max(hi);
        let (excess, value) = if -1.0 - lo > hi - 1.0 { (-1.0 - lo, lo) } else { (hi - 1.0, hi) };
        if excess > tolerance {
            b.violations += 1;
        }
        if excess > worst_excess {
            worst_excess = excess;
            b.worst = Some((j, value));
        }
    }
    b
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Result of comparing Hessian angles before and after rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleShiftReport {
    /// `max |arctan λ̄ − (arctan λ − α)|` over matched nodes.
    pub max_deviation: f64,
    pub matched: usize,
    pub skipped: usize,
}

impl AngleShiftReport {
    /// Fraction of interior source nodes that were matched.
    pub fn coverage(&self) -> f64 {
        let total = self.matched + self.skipped;
        if total == 0 {
            0.0
        } else {
            self.matched as f64 / total as f64
        }
    }
}

/// Compares the sorted Hessian angles of `u` at each interior source node `x`
/// with those of `ū` at the dual node nearest to `x̄ = c·x + s·Du(x)`.
///
/// A node is skipped when its image falls on or outside the dual boundary, or
/// when the matched dual node maps back to within `2h` of the source boundary,
/// where one-sided differences dominate.
pub fn angle_shift_check(u: &ScalarField, rotated: &RotatedPotential) -> Result<AngleShiftReport, RotationError> {
    let grid = u.grid();
    if grid != rotated.source_grid() {
        return Err(FieldError::GridMismatch.into());
    }
    let dim = grid.dim();
    let angle = rotated.angle();
    let dual = rotated.potential().grid();
    let margin = 2.0 * grid.spacing();
    let grad = gradient(u);
    let mut report = AngleShiftReport {
        max_deviation: 0.0,
        matched: 0,
        skipped: 0,
    };
    for k in grid.interior() {
        let x = grid.coord(k);
        let g = grad.at(k);
        let mut xb = [0.0; MAX_DIM];
        for a in 0..dim {
            xb[a] = angle.c * x[a] + angle.s * g[a];
        }
        let j = dual.nearest(&xb[..dim]);
        if dual.inset(&xb[..dim]) <= 0.0
            || dual.is_boundary(j)
            || grid.inset(rotated.reverse_map().at(j)) < margin
        {
            report.skipped += 1;
            continue;
        }
        let before = sym_eigen(&hessian_at(grid, u.values(), k));
        let after = sym_eigen(rotated.hessian().at(j));
        for (l, lb) in before.values().iter().zip(after.values()) {
            let dev = (lb.atan() - (l.atan() - angle.alpha)).abs();
            report.max_deviation = report.max_deviation.max(dev);
        }
        report.matched += 1;
    }
    Ok(report)
}

/// `ψ̄(x̄) = ψ(x(x̄)) − nα`, sampled on the dual grid of `rotated`. Preimages
/// outside the domain of `ψ` are projected onto its box.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedPhase {
    pub field: ScalarField,
    pub shift: f64,
}

pub fn rotated_phase(psi: &PhaseField, rotated: &RotatedPotential) -> Result<RotatedPhase, RotationError> {
    let pg = psi.field().grid();
    let dual = rotated.potential().grid();
    let dim = dual.dim();
    if pg.dim() != dim {
        return Err(FieldError::Arity {
            expected: dim,
            got: pg.dim(),
        }
        .into());
    }
    let shift = dim as f64 * rotated.angle().alpha;
    let values = (0..dual.len())
        .map(|j| {
            let x = rotated.reverse_map().at(j);
            let mut p = [0.0; MAX_DIM];
            for a in 0..dim {
                p[a] = x[a].clamp(pg.origin()[a], pg.upper(a));
            }
            psi.field().interpolate_cubic(&p[..dim]).map(|v| v - shift)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RotatedPhase {
        field: ScalarField::new(dual.clone(), values)?,
        shift,
    })
}

impl RotatedPhase {
    pub fn into_phase_field(self, regularity: Regularity) -> PhaseField {
        PhaseField::new(self.field, regularity)
    }
}

/// Outcome of rotating an ordered pair `u ≤ v` onto a common dual grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    /// `max (ū − v̄)` over the dual nodes.
    pub max_excess: f64,
    pub tolerance: f64,
    pub nodes: usize,
}

impl OrderReport {
    pub fn holds(&self) -> bool {
        self.max_excess <= self.tolerance
    }
}

/// Checks that `u ≤ v` implies `ū ≤ v̄`, up to `10 h`. Both potentials are
/// rotated onto the dual grid of `u`.
pub fn order_preservation_check(
    u: &ScalarField,
    v: &ScalarField,
    angle: RotationAngle,
) -> Result<OrderReport, RotationError> {
    if u.grid() != v.grid() {
        return Err(FieldError::GridMismatch.into());
    }
    let scale = 1.0 + u.values().iter().chain(v.values()).fold(0.0f64, |m, x| m.max(x.abs()));
    for (k, (a, b)) in u.values().iter().zip(v.values()).enumerate() {
        if a - b > 1e-12 * scale {
            return Err(RotationError::NotOrdered { node: k, excess: a - b });
        }
    }
    let ru = rotate_unchecked(u, angle)?;
    let dual = ru.potential().grid().clone();
    let rv = rotate_on(v, angle, &dual)?;
    let max_excess = ru
        .potential()
        .values()
        .iter()
        .zip(rv.potential().values())
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(OrderReport {
        max_excess,
        tolerance: bound_tolerance(u.grid()),
        nodes: dual.len(),
    })
}

/// Rotates `ū` back by `α`: `u = −R(−ū)`, with `R` the downward rotation.
/// Requires `λ̄ ≤ 1 − δ` on image nodes at least `2h` inside the source, since
/// `−ū` must be lifted to a uniformly convex `s·(−ū) + (c/2)|x̄|²`.
pub fn rotate_upward(rotated: &RotatedPotential) -> Result<ScalarField, RotationError> {
    let nodes = rotated.image_nodes_within(2.0 * rotated.source_grid().spacing());
    let max = nodes
        .iter()
        .map(|&j| sym_eigen(rotated.hessian().at(j)).max())
        .fold(f64::NEG_INFINITY, f64::max);
    if max > 1.0 - UPWARD_MARGIN {
        return Err(RotationError::UpwardDomain {
            max,
            margin: UPWARD_MARGIN,
        });
    }
    let neg = rotated.potential().map(|v| -v)?;
    let back = rotate_unchecked(&neg, rotated.angle())?;
    Ok(back.into_potential().map(|v| -v)?)
}
