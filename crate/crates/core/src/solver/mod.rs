//! Damped Newton solver for the Dirichlet problem `F(D²u) = ψ` on rectangular
//! grids of dimension one or two.
//!
//! The discrete operator applies `F` to the central-difference Hessian at each
//! interior node, so the Newton matrix is exactly `δu ↦ tr(DF(H) · D²_h δu)`,
//! a nine-point stencil in 2D. Steps are halved until the sup-norm residual
//! decreases.

mod banded;

use std::f64::consts::FRAC_PI_4;

use banded::BandMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::convex::convexity_check;
use crate::fields::{hessian_at, sym_eigen, FieldError, Grid, ScalarField, SymMat};
use crate::operator::{OperatorVariant, PhaseField, Regularity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("solver supports dimensions 1 and 2, got {0}")]
    Dimension(usize),
    #[error("boundary data: {0}")]
    Boundary(String),
    #[error("phase field does not live on the problem grid")]
    PhaseGrid,
    #[error("no convergence: residual {residual:.3e} after {iterations} iterations ({reason})")]
    NotConverged {
        residual: f64,
        iterations: usize,
        reason: String,
        report: Box<SolveReport>,
    },
    #[error("linear solve broke down at unknown {row}")]
    LinearSolve { row: usize },
    #[error("continuation needs at least one step")]
    Steps,
    #[error("continuation failed at t = {failed_t} (last converged t = {last_good_t}): {source}")]
    Continuation {
        last_good_t: f64,
        failed_t: f64,
        source: Box<SolverError>,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Boundary values, one per boundary node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    values: Vec<(usize, f64)>,
}

impl BoundaryData {
    /// Samples `g` at every boundary node of `grid`.
    pub fn from_fn(grid: &Grid, g: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .filter(|&k| grid.is_boundary(k))
            .map(|k| (k, g(&grid.coord(k)[..dim])))
            .collect();
        Self { values }
    }

    /// Takes the boundary nodes of a full field.
    pub fn from_field(f: &ScalarField) -> Self {
        let grid = f.grid();
        let values = (0..grid.len())
            .filter(|&k| grid.is_boundary(k))
            .map(|k| (k, f.value(k)))
            .collect();
        Self { values }
    }

    /// Validates `(node, value)` pairs: every boundary node exactly once, all
    /// values finite, no interior nodes.
    pub fn from_pairs(grid: &Grid, pairs: Vec<(usize, f64)>) -> Result<Self, SolverError> {
        let mut seen = vec![false; grid.len()];
        for &(k, v) in &pairs {
            if k >= grid.len() {
                return Err(SolverError::Boundary(format!("node {k} is outside the grid")));
            }
            if !grid.is_boundary(k) {
                return Err(SolverError::Boundary(format!("node {k} is not on the boundary")));
            }
            if !v.is_finite() {
                return Err(SolverError::Boundary(format!("value at node {k} is not finite")));
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(SolverError::Boundary(format!("node {k} appears twice")));
            }
        }
        if let Some(k) = (0..grid.len()).find(|&k| grid.is_boundary(k) && !seen[k]) {
            return Err(SolverError::Boundary(format!("boundary node {k} has no value")));
        }
        let mut values = pairs;
        values.sort_by_key(|p| p.0);
        Ok(Self { values })
    }

    pub fn pairs(&self) -> &[(usize, f64)] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletProblem {
    pub psi: PhaseField,
    pub boundary: BoundaryData,
    pub variant: OperatorVariant,
}

impl DirichletProblem {
    pub fn new(psi: PhaseField, boundary: BoundaryData, variant: OperatorVariant) -> Result<Self, SolverError> {
        let grid = psi.field().grid();
        if grid.dim() > 2 {
            return Err(SolverError::Dimension(grid.dim()));
        }
        let mut seen = vec![false; grid.len()];
        for &(k, _) in boundary.pairs() {
            if k >= grid.len() || !grid.is_boundary(k) {
                return Err(SolverError::Boundary(format!("node {k} is not a boundary node of the phase grid")));
            }
            seen[k] = true;
        }
        if let Some(k) = (0..grid.len()).find(|&k| grid.is_boundary(k) && !seen[k]) {
            return Err(SolverError::Boundary(format!("boundary node {k} has no value")));
        }
        Ok(Self { psi, boundary, variant })
    }

    pub fn grid(&self) -> &Grid {
        self.psi.field().grid()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub min_step: f64,
    /// Starting iterate; its boundary values are replaced by the data.
    pub initial: Option<ScalarField>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            min_step: 2f64.powi(-20),
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// Sup-norm residual of the initial guess and after every accepted step.
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub iterations: usize,
    /// Step halvings over the whole solve.
    pub damping_events: usize,
    pub eigenvalue_min: f64,
    pub eigenvalue_max: f64,
    pub convex: bool,
    pub converged: bool,
}

/// Interior unknowns in row-major node order.
struct Layout {
    unknown: Vec<Option<usize>>,
    nodes: Vec<usize>,
    band: usize,
}

impl Layout {
    fn new(grid: &Grid) -> Self {
        let mut unknown = vec![None; grid.len()];
        let nodes: Vec<usize> = grid.interior().collect();
        for (p, &k) in nodes.iter().enumerate() {
            unknown[k] = Some(p);
        }
        // Farthest stencil neighbour in unknown numbering: one interior row plus one.
        let band = if grid.dim() == 1 { 1 } else { grid.shape()[1] - 2 + 1 };
        Self { unknown, nodes, band }
    }
}

/// `(node, weight)` pairs of `δu ↦ tr(A · D²_h δu)` at interior node `k`.
fn stencil(grid: &Grid, k: usize, a: &SymMat, out: &mut Vec<(usize, f64)>) {
    out.clear();
    let h2 = grid.spacing().powi(2);
    let dim = grid.dim();
    for i in 0..dim {
        let st = grid.stride(i);
        let c = a.get(i, i) / h2;
        out.push((k + st, c));
        out.push((k - st, c));
        out.push((k, -2.0 * c));
        for j in i + 1..dim {
            let sj = grid.stride(j);
            let c = a.get(i, j) / (2.0 * h2);
            out.push((k + st + sj, c));
            out.push((k + st - sj, -c));
            out.push((k - st + sj, -c));
            out.push((k - st - sj, c));
        }
    }
}

/// Solves `tr(A(k) · D²_h w) = rhs` at interior nodes with `w` fixed on the
/// boundary; returns the full field.
fn linear_solve(
    grid: &Grid,
    layout: &Layout,
    coeff: impl Fn(usize) -> SymMat,
    rhs: impl Fn(usize) -> f64,
    boundary: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let m = layout.nodes.len();
    let mut w = boundary.to_vec();
    if m == 0 {
        return Ok(w);
    }
    let mut mat = BandMatrix::zeros(m, layout.band, layout.band);
    let mut b = vec![0.0; m];
    let mut entries = Vec::with_capacity(9);
    for (p, &k) in layout.nodes.iter().enumerate() {
        stencil(grid, k, &coeff(k), &mut entries);
        b[p] = rhs(k);
        for &(node, c) in &entries {
            match layout.unknown[node] {
                Some(q) => mat.add(p, q, c),
                None => b[p] -= c * boundary[node],
            }
        }
    }
    mat.solve(&mut b).map_err(|e| SolverError::LinearSolve { row: e.row })?;
    for (p, &k) in layout.nodes.iter().enumerate() {
        w[k] = b[p];
    }
    Ok(w)
}

/// Interior residual `F(D²_h u) − ψ`; `∞` where `F` is undefined.
fn residual(problem: &DirichletProblem, layout: &Layout, u: &[f64], out: &mut [f64]) -> f64 {
    let grid = problem.grid();
    let psi = problem.psi.field();
    let mut sup: f64 = 0.0;
    for (p, &k) in layout.nodes.iter().enumerate() {
        let h = hessian_at(grid, u, k);
        let r = problem
            .variant
            .evaluate(&h)
            .map_or(f64::INFINITY, |f| f - psi.value(k));
        out[p] = r;
        sup = sup.max(r.abs());
    }
    if sup.is_nan() {
        f64::INFINITY
    } else {
        sup
    }
}

/// Quadratic `q|x|²/2` solving the mean phase, plus the discrete harmonic
/// extension of the remaining boundary data.
pub fn initial_guess(problem: &DirichletProblem) -> Result<ScalarField, SolverError> {
    let grid = problem.grid();
    let dim = grid.dim();
    let layout = Layout::new(grid);
    let values = problem.psi.field().values();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let q = problem.variant.quadratic_for(mean, dim);
    let quad = |k: usize| 0.5 * q * grid.coord(k)[..dim].iter().map(|x| x * x).sum::<f64>();
    let mut boundary = vec![0.0; grid.len()];
    for &(k, g) in problem.boundary.pairs() {
        boundary[k] = g - quad(k);
    }
    let harmonic = linear_solve(grid, &layout, |_| SymMat::identity(dim), |_| 0.0, &boundary)?;
    let u = (0..grid.len()).map(|k| harmonic[k] + quad(k)).collect();
    Ok(ScalarField::new(grid.clone(), u)?)
}

pub fn solve(problem: &DirichletProblem, opts: &SolveOptions) -> Result<(ScalarField, SolveReport), SolverError> {
    let grid = problem.grid().clone();
    let layout = Layout::new(&grid);
    let mut u = match &opts.initial {
        Some(f) if f.grid() != &grid => return Err(FieldError::GridMismatch.into()),
        Some(f) => f.values().to_vec(),
        None => initial_guess(problem)?.into_values(),
    };
    let mut boundary = vec![0.0; grid.len()];
    for &(k, g) in problem.boundary.pairs() {
        u[k] = g;
        boundary[k] = 0.0;
    }
    let m = layout.nodes.len();
    let mut r = vec![0.0; m];
    let mut r_try = vec![0.0; m];
    let mut norm = residual(problem, &layout, &u, &mut r);
    let mut report = SolveReport {
        residual_history: vec![norm],
        final_residual: norm,
        iterations: 0,
        damping_events: 0,
        eigenvalue_min: 0.0,
        eigenvalue_max: 0.0,
        convex: false,
        converged: false,
    };
    let fail = |report: &SolveReport, reason: &str| SolverError::NotConverged {
        residual: report.final_residual,
        iterations: report.iterations,
        reason: reason.to_string(),
        report: Box::new(report.clone()),
    };
    if !norm.is_finite() {
        return Err(fail(&report, "operator undefined at the initial iterate"));
    }
    while norm > opts.tol {
        if report.iterations >= opts.max_iter {
            finish(&grid, &u, &mut report);
            return Err(fail(&report, "iteration limit"));
        }
        let delta = {
            let rhs: Vec<f64> = {
                let mut full = vec![0.0; grid.len()];
                for (p, &k) in layout.nodes.iter().enumerate() {
                    full[k] = -r[p];
                }
                full
            };
            linear_solve(
                &grid,
                &layout,
                |k| problem.variant.linearize(&hessian_at(&grid, &u, k)),
                |k| rhs[k],
                &boundary,
            )?
        };
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let n_try = residual(problem, &layout, &trial, &mut r_try);
            if n_try <= (1.0 - 1e-4 * t) * norm {
                u = trial;
                std::mem::swap(&mut r, &mut r_try);
                norm = n_try;
                break;
            }
            t *= 0.5;
            report.damping_events += 1;
            if t < opts.min_step {
                report.iterations += 1;
                finish(&grid, &u, &mut report);
                return Err(fail(&report, "step length below the minimum"));
            }
        }
        report.iterations += 1;
        report.residual_history.push(norm);
        report.final_residual = norm;
    }
    report.converged = true;
    finish(&grid, &u, &mut report);
    Ok((ScalarField::new(grid, u)?, report))
}

fn finish(grid: &Grid, u: &[f64], report: &mut SolveReport) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in grid.interior() {
        let eig = sym_eigen(&hessian_at(grid, u, k));
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
    }
    report.eigenvalue_min = lo;
    report.eigenvalue_max = hi;
    report.convex = ScalarField::new(grid.clone(), u.to_vec())
        .map(|f| convexity_check(&f).is_certified())
        .unwrap_or(false);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationPath {
    pub solution: ScalarField,
    /// `(t, report)` for every step.
    pub steps: Vec<(f64, SolveReport)>,
}

/// Warm-started solves along `ψ_t = (1 − t)·ψ₀ + t·ψ`, `t = 1/steps, …, 1`,
/// where `ψ₀` is the phase of the identity Hessian. A constant `ψ` is solved
/// in a single step.
pub fn continuation_solve(
    problem: &DirichletProblem,
    steps: usize,
    opts: &SolveOptions,
) -> Result<ContinuationPath, SolverError> {
    if steps == 0 {
        return Err(SolverError::Steps);
    }
    let grid = problem.grid();
    let steps = if problem.psi.is_constant() { 1 } else { steps };
    let base = problem.variant.identity_value(grid.dim());
    let mut current = opts.initial.clone();
    let mut path = Vec::with_capacity(steps);
    let mut last_good_t = 0.0;
    for s in 1..=steps {
        let t = s as f64 / steps as f64;
        let psi_t = if s == steps {
            problem.psi.field().clone()
        } else {
            problem.psi.field().map(|v| (1.0 - t) * base + t * v)?
        };
        let sub = DirichletProblem {
            psi: PhaseField::new(psi_t, problem.psi.regularity()),
            boundary: problem.boundary.clone(),
            variant: problem.variant,
        };
        let sub_opts = SolveOptions {
            initial: current.take(),
            ..opts.clone()
        };
        match solve(&sub, &sub_opts) {
            Ok((u, report)) => {
                path.push((t, report));
                current = Some(u);
                last_good_t = t;
            }
            Err(e) => {
                return Err(SolverError::Continuation {
                    last_good_t,
                    failed_t: t,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(ContinuationPath {
        solution: current.expect("at least one step ran"),
        steps: path,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    /// `max u − min u` over nodes with `|x| ≤ 1/2`.
    pub osc: f64,
    /// Largest `|λ|` of the discrete Hessian at the node nearest the origin.
    pub hessian_at_origin: f64,
}

/// Least-squares fit of `ln |D²u(0)| = ln C₁ + C₂ · osc^{2n−2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeFit {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    pub exponent: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    /// `None` when the regressor does not vary (including `n = 1`).
    pub fit: Option<ProbeFit>,
}

pub fn probe_row(u: &ScalarField) -> ProbeRow {
    let grid = u.grid();
    let dim = grid.dim();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..grid.len() {
        let r2: f64 = grid.coord(k)[..dim].iter().map(|x| x * x).sum();
        if r2 <= 0.25 + 1e-12 {
            lo = lo.min(u.value(k));
            hi = hi.max(u.value(k));
        }
    }
    let mut centre = grid.nearest(&[0.0; 3][..dim]);
    if grid.is_boundary(centre) {
        centre = grid.interior().next().unwrap_or(centre);
    }
    let eig = sym_eigen(&hessian_at(grid, u.values(), centre));
    ProbeRow {
        osc: if hi >= lo { hi - lo } else { 0.0 },
        hessian_at_origin: eig.values().iter().fold(0.0f64, |m, l| m.max(l.abs())),
    }
}

/// Fits the rows of a Hessian-estimate scatter in dimension `n`.
pub fn fit_probe(rows: &[ProbeRow], n: usize) -> Option<ProbeFit> {
    let exponent = 2 * n as i32 - 2;
    if exponent == 0 || rows.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.hessian_at_origin > 0.0)
        .map(|r| (r.osc.powi(exponent), r.hessian_at_origin.ln()))
        .collect();
    let count = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / count;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 1e-300) {
        return None;
    }
    let c2 = sxy / sxx;
    let intercept = my - c2 * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(ProbeFit {
        c1: intercept.exp(),
        c2,
        r_squared,
        exponent,
    })
}

/// Solves every member of a family and tabulates `(osc u, |D²u(0)|)`.
pub fn hessian_estimate_probe(family: &[DirichletProblem], opts: &SolveOptions) -> Result<ProbeTable, SolverError> {
    let mut rows = Vec::with_capacity(family.len());
    for p in family {
        let (u, _) = solve(p, opts)?;
        rows.push(probe_row(&u));
    }
    let n = family.first().map_or(1, |p| p.grid().dim());
    Ok(ProbeTable {
        fit: fit_probe(&rows, n),
        rows,
    })
}

/// `u = a|x|²/2` with `ψ = n·arctan a`: the quadratic family of the probe.
pub fn quadratic_problem(grid: &Grid, a: f64) -> Result<DirichletProblem, SolverError> {
    let dim = grid.dim();
    let psi = ScalarField::constant(grid, dim as f64 * a.atan())?;
    let boundary = BoundaryData::from_fn(grid, |x| 0.5 * a * x[..dim].iter().map(|v| v * v).sum::<f64>());
    DirichletProblem::new(PhaseField::new(psi, Regularity::C2Alpha), boundary, OperatorVariant::Arctan)
}

/// Phase of the identity Hessian, `nπ/4`.
pub fn identity_phase(dim: usize) -> f64 {
    dim as f64 * FRAC_PI_4
}
