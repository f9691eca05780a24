//! Browser demo. The plain functions do the work and are tested natively;
//! the `#[wasm_bindgen]` wrappers hand their results to JavaScript as JSON.

use std::f64::consts::PI;

use lagrot::convex::ConvexPotential;
use lagrot::fields::{sym_eigen, Grid, ScalarField};
use lagrot::geometry::{b_bar, bm_convexity_gap};
use lagrot::operator::{OperatorVariant, PhaseField, Regularity};
use lagrot::rotation::{rotate, RotationAngle};
use lagrot::solver::{solve, BoundaryData, DirichletProblem, SolveOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rotation1d {
    pub x_bar: Vec<f64>,
    pub u_bar: Vec<f64>,
    /// Second differences of `ū`; `NaN` on the two end nodes.
    pub lambda_bar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solve1d {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapCurve {
    pub t: Vec<f64>,
    pub b_bar: Vec<f64>,
    pub gap: Vec<f64>,
}

fn line(lo: f64, hi: f64, n: usize) -> Result<Grid, String> {
    Grid::cube(1, lo, hi, n).map_err(|e| e.to_string())
}

/// Rotates samples of a convex `u` on `[lo, hi]` by `alpha`.
pub fn rotate_samples(lo: f64, hi: f64, values: Vec<f64>, alpha: f64) -> Result<Rotation1d, String> {
    let grid = line(lo, hi, values.len())?;
    let u = ScalarField::new(grid, values).map_err(|e| e.to_string())?;
    let u = ConvexPotential::certify(u).map_err(|e| e.to_string())?;
    let angle = RotationAngle::new(alpha).map_err(|e| e.to_string())?;
    let r = rotate(&u, angle).map_err(|e| e.to_string())?;
    let dual = r.potential().grid();
    let x_bar = (0..dual.len()).map(|j| dual.coord(j)[0]).collect();
    let lambda_bar = (0..dual.len())
        .map(|j| if dual.is_boundary(j) { f64::NAN } else { sym_eigen(r.hessian().at(j)).max() })
        .collect();
    Ok(Rotation1d {
        x_bar,
        u_bar: r.potential().values().to_vec(),
        lambda_bar,
    })
}

/// Solves `arctan u″ = ψ` on `[lo, hi]` with `u(lo) = left`, `u(hi) = right`.
pub fn solve_samples(lo: f64, hi: f64, psi: Vec<f64>, left: f64, right: f64) -> Result<Solve1d, String> {
    if let Some(p) = psi.iter().find(|p| !(-PI / 2.0..PI / 2.0).contains(*p)) {
        return Err(format!("phase {p} is outside (-π/2, π/2)"));
    }
    let grid = line(lo, hi, psi.len())?;
    let last = grid.len() - 1;
    let boundary = BoundaryData::from_pairs(&grid, vec![(0, left), (last, right)]).map_err(|e| e.to_string())?;
    let field = ScalarField::new(grid.clone(), psi).map_err(|e| e.to_string())?;
    let problem = DirichletProblem::new(PhaseField::new(field, Regularity::C2Alpha), boundary, OperatorVariant::Arctan)
        .map_err(|e| e.to_string())?;
    let (u, report) = solve(&problem, &SolveOptions::default()).map_err(|e| e.to_string())?;
    Ok(Solve1d {
        x: (0..grid.len()).map(|k| grid.coord(k)[0]).collect(),
        u: u.values().to_vec(),
        residuals: report.residual_history,
        converged: report.converged,
    })
}

/// `b̄` and the convexity gap on `samples` equally spaced points of `[0, 1]`.
pub fn gap_curve(samples: usize) -> GapCurve {
    let n = samples.max(2);
    let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    GapCurve {
        b_bar: t.iter().map(|&t| b_bar(t)).collect(),
        gap: t.iter().map(|&t| bm_convexity_gap(t).expect("t lies in [0, 1]")).collect(),
        t,
    }
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = rotatePotential)]
pub fn rotate_potential(lo: f64, hi: f64, values: Vec<f64>, alpha: f64) -> Result<String, JsValue> {
    to_js(rotate_samples(lo, hi, values, alpha))
}

#[wasm_bindgen(js_name = solvePhase)]
pub fn solve_phase(lo: f64, hi: f64, psi: Vec<f64>, left: f64, right: f64) -> Result<String, JsValue> {
    to_js(solve_samples(lo, hi, psi, left, right))
}

#[wasm_bindgen(js_name = gapCurve)]
pub fn gap_curve_js(samples: usize) -> Result<String, JsValue> {
    to_js(Ok(gap_curve(samples)))
}
