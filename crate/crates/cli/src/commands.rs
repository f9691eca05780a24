use anyhow::{anyhow, Context};
use lagrot::convex::{legendre as legendre_transform, ConvexError, ConvexPotential};
use lagrot::fields::{sym_eigen, ScalarField};
use lagrot::io::{boundary_from_json, parse_grid_spec};
use lagrot::operator::{admissibility, OperatorVariant, PhaseField, Regularity};
use lagrot::rotation::{bound_tolerance, rotate_unchecked, RotatedPotential, RotationAngle};
use lagrot::solver::{
    continuation_solve, hessian_estimate_probe, quadratic_problem, solve as newton_solve, DirichletProblem,
    SolveOptions, SolveReport, SolverError,
};
use serde_json::{json, Value};

use crate::output::{read_scalar, read_text, write_report, write_scalar};
use crate::{exit, Failure, Global, LegendreArgs, ProbeArgs, RotateArgs, SolveArgs, Variant};

fn variant(v: Variant) -> OperatorVariant {
    match v {
        Variant::Arctan => OperatorVariant::Arctan,
        Variant::Concave => OperatorVariant::ModifiedConcave,
        Variant::Ma => OperatorVariant::MongeAmpereDual,
    }
}

fn solve_report(report: &SolveReport, variant: OperatorVariant, tol: f64, oracle_error: Option<f64>) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    let obj = v.as_object_mut().expect("report is an object");
    obj.insert("kind".into(), json!("solve"));
    obj.insert("variant".into(), json!(variant.name()));
    obj.insert("tol".into(), json!(tol));
    if let Some(e) = oracle_error {
        obj.insert("oracle_error".into(), json!(e));
    }
    v
}

pub fn solve(a: &SolveArgs, g: &Global) -> Result<(), Failure> {
    let psi = read_scalar(&a.phase)?;
    if let Some(spec) = &a.grid {
        let grid = parse_grid_spec(spec).map_err(|e| anyhow!(e))?;
        if &grid != psi.grid() {
            return Err(Failure::new(exit::USAGE, format!("--grid {spec} does not match the phase grid")));
        }
    }
    let grid = psi.grid().clone();
    let boundary =
        boundary_from_json(&read_text(&a.boundary)?, &grid).with_context(|| format!("{}", a.boundary.display()))?;
    let oracle = a.oracle.as_deref().map(read_scalar).transpose()?;
    if oracle.as_ref().is_some_and(|o| o.grid() != &grid) {
        return Err(Failure::new(exit::USAGE, "oracle grid does not match the phase grid"));
    }
    let variant = variant(a.variant);
    let phase = PhaseField::new(psi, Regularity::C2Alpha);
    if variant == OperatorVariant::Arctan {
        let adm = admissibility(&phase);
        if let Some(&k) = adm.out_of_range.first() {
            return Err(Failure::new(
                exit::USAGE,
                format!("phase outside [0, nπ/2) at {} nodes (first: node {k})", adm.out_of_range.len()),
            ));
        }
    }
    let problem = DirichletProblem::new(phase, boundary, variant).map_err(|e| anyhow!(e))?;
    let opts = SolveOptions {
        tol: g.tol.unwrap_or(SolveOptions::default().tol),
        max_iter: a.max_iter,
        ..SolveOptions::default()
    };
    let result = if a.continuation > 0 {
        continuation_solve(&problem, a.continuation, &opts)
            .map(|path| (path.solution, path.steps.last().expect("one step at least").1.clone()))
    } else {
        newton_solve(&problem, &opts)
    };
    let (u, report) = match result {
        Ok(r) => r,
        Err(e) => {
            let failed = match &e {
                SolverError::NotConverged { report, .. } => Some(report.as_ref().clone()),
                SolverError::Continuation { source, .. } => match source.as_ref() {
                    SolverError::NotConverged { report, .. } => Some(report.as_ref().clone()),
                    _ => None,
                },
                _ => None,
            };
            if let (Some(path), Some(r)) = (&a.report, failed) {
                write_report(path, &solve_report(&r, variant, opts.tol, None))?;
            }
            return Err(Failure::new(exit::FAILED, format!("solve failed: {e}")));
        }
    };
    let oracle_error = oracle.map(|o| {
        (0..grid.len())
            .map(|k| (u.value(k) - o.value(k)).abs())
            .fold(0.0, f64::max)
    });
    write_scalar(&a.out, &u)?;
    if let Some(path) = &a.report {
        write_report(path, &solve_report(&report, variant, opts.tol, oracle_error))?;
    }
    if !g.quiet {
        println!(
            "converged in {} iterations, residual {:.3e}",
            report.iterations, report.final_residual
        );
        if let Some(e) = oracle_error {
            println!("max error against oracle {e:.3e}");
        }
    }
    Ok(())
}

fn certify(u: ScalarField) -> Result<ConvexPotential, Failure> {
    ConvexPotential::certify(u).map_err(|e| match e {
        ConvexError::NotConvex { node, .. } => Failure::new(exit::FAILED, format!("{e} (violating node {node})")),
        other => Failure::new(exit::USAGE, other.to_string()),
    })
}

/// Histogram of all eigenvalues of `D²ū` over the interior dual nodes.
const HISTOGRAM_BINS: usize = 20;

fn rotation_report(r: &RotatedPotential, tolerance: f64, worst: Option<(usize, f64)>, violations: usize) -> Value {
    let dual = r.potential().grid();
    let dim = dual.dim();
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut unit_nodes = 0usize;
    let mut unit_box = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
    for j in dual.interior() {
        let eig = sym_eigen(r.hessian().at(j));
        for &l in eig.values() {
            let bin = (((l + 1.0) / 2.0 * HISTOGRAM_BINS as f64).floor() as isize).clamp(0, HISTOGRAM_BINS as isize - 1);
            counts[bin as usize] += 1;
        }
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
        if (eig.max() - 1.0).abs() <= tolerance {
            unit_nodes += 1;
            let x = dual.coord(j);
            for (a, b) in unit_box.iter_mut().enumerate() {
                b.0 = b.0.min(x[a]);
                b.1 = b.1.max(x[a]);
            }
        }
    }
    let edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|i| -1.0 + 2.0 * i as f64 / HISTOGRAM_BINS as f64).collect();
    json!({
        "kind": "rotate",
        "alpha": r.angle().alpha(),
        "source_spacing": r.source_grid().spacing(),
        "dual_spacing": dual.spacing(),
        "dual_shape": dual.shape(),
        "lambda_bar_min": lo,
        "lambda_bar_max": hi,
        "tolerance": tolerance,
        "violations": violations,
        "worst": worst.map(|(node, value)| json!({"node": node, "value": value})),
        "unit_region": {
            "nodes": unit_nodes,
            "box": if unit_nodes > 0 { json!(unit_box.iter().map(|b| [b.0, b.1]).collect::<Vec<_>>()) } else { Value::Null },
        },
        "histogram": {"edges": edges, "counts": counts},
    })
}

pub fn rotate(a: &RotateArgs, g: &Global) -> Result<(), Failure> {
    let u = read_scalar(&a.input)?;
    let angle = match a.alpha {
        Some(alpha) => RotationAngle::new(alpha).map_err(|e| Failure::new(exit::USAGE, e.to_string()))?,
        None => RotationAngle::quarter(),
    };
    let tolerance = g.tol.unwrap_or_else(|| bound_tolerance(u.grid()));
    let u = certify(u)?;
    let r = rotate_unchecked(u.field(), angle).map_err(|e| Failure::new(exit::USAGE, e.to_string()))?;
    let dual = r.potential().grid();
    let mut violations = 0;
    let mut worst: Option<(usize, f64)> = None;
    let mut worst_excess = 0.0;
    for j in dual.interior() {
        let eig = sym_eigen(r.hessian().at(j));
        let (excess, value) = if -1.0 - eig.min() > eig.max() - 1.0 {
            (-1.0 - eig.min(), eig.min())
        } else {
            (eig.max() - 1.0, eig.max())
        };
        if excess > tolerance {
            violations += 1;
        }
        if excess > worst_excess {
            worst_excess = excess;
            worst = Some((j, value));
        }
    }
    if violations > 0 {
        let (node, value) = worst.expect("violations imply a worst node");
        return Err(Failure::new(
            exit::BOUND,
            format!("rotated Hessian eigenvalue {value:.6e} at dual node {node} exceeds [-1, 1] by more than {tolerance:.3e} ({violations} nodes)"),
        ));
    }
    write_scalar(&a.out, r.potential())?;
    if let Some(path) = &a.report {
        write_report(path, &rotation_report(&r, tolerance, worst, violations))?;
    }
    if !g.quiet {
        println!(
            "rotated onto {:?} dual nodes, λ̄ within [-1, 1] up to {:.3e}",
            dual.shape(),
            worst_excess
        );
    }
    Ok(())
}

pub fn legendre(a: &LegendreArgs, g: &Global) -> Result<(), Failure> {
    let f = certify(read_scalar(&a.input)?)?;
    let dual = a.dual.as_deref().map(parse_grid_spec).transpose().map_err(|e| anyhow!(e))?;
    let star = legendre_transform(&f, dual.as_ref()).map_err(|e| Failure::new(exit::USAGE, e.to_string()))?;
    write_scalar(&a.out, &star.field)?;
    if !g.quiet {
        println!(
            "transform on {:?} dual nodes, convexity {}",
            star.field.grid().shape(),
            if star.certified { "certified" } else { "not certified" }
        );
    }
    Ok(())
}

pub fn probe(a: &ProbeArgs, g: &Global) -> Result<(), Failure> {
    let grid = parse_grid_spec(&a.grid).map_err(|e| anyhow!(e))?;
    let family = a
        .amplitudes
        .iter()
        .map(|&amp| {
            if amp > 0.0 && amp.is_finite() {
                quadratic_problem(&grid, amp).map_err(|e| Failure::new(exit::USAGE, e.to_string()))
            } else {
                Err(Failure::new(exit::USAGE, format!("amplitude {amp} must be positive")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let opts = SolveOptions {
        tol: g.tol.unwrap_or(SolveOptions::default().tol),
        ..SolveOptions::default()
    };
    let table = hessian_estimate_probe(&family, &opts).map_err(|e| Failure::new(exit::FAILED, e.to_string()))?;
    let mut v = serde_json::to_value(&table).map_err(|e| anyhow!(e))?;
    let obj = v.as_object_mut().expect("table is an object");
    obj.insert("kind".into(), json!("probe"));
    obj.insert("amplitudes".into(), json!(a.amplitudes));
    write_report(&a.out, &v)?;
    if !g.quiet {
        match table.fit {
            Some(fit) => println!(
                "{} rows; ln|D²u(0)| ≈ {:.4} + {:.4}·osc^{} (R² = {:.4})",
                table.rows.len(),
                fit.c1.ln(),
                fit.c2,
                fit.exponent,
                fit.r_squared
            ),
            None => println!("{} rows; no fit", table.rows.len()),
        }
    }
    Ok(())
}
