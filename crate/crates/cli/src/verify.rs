//! Built-in verification suites. Every check records a measured value and the
//! tolerance it is held to; randomized checks draw from one seeded generator.

use std::f64::consts::{FRAC_PI_4, PI};

use lagrot::convex::{biconjugate_check, convexity_check, legendre, ConvexPotential, ConvexityVerdict};
use lagrot::fields::{gradient, hessian, sym_eigen, Grid, MatrixField, ScalarField, SymMat};
use lagrot::geometry::{bm_convexity_gap, flat_laplacian, induced_metric, laplace_beltrami, mean_curvature, vmo_modulus};
use lagrot::operator::{linearize, ma_dual_residual, phase_of, sigma_form_residual, PhaseField, Regularity};
use lagrot::rotation::{
    angle_shift_check, bound_tolerance, inverse_hessian_law, order_preservation_check, rotate_unchecked,
    RotationAngle,
};
use lagrot::solver::{quadratic_problem, solve, BoundaryData, DirichletProblem, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{read_scalar, write_report};
use crate::{exit, Failure, Global, Suite, VerifyArgs};

#[derive(Debug, Clone, Serialize)]
struct Check {
    suite: &'static str,
    name: &'static str,
    pass: bool,
    measured: f64,
    tolerance: f64,
}

struct Run {
    checks: Vec<Check>,
    rng: ChaCha8Rng,
    tol: Option<f64>,
    omega: Option<Value>,
}

impl Run {
    /// Passes when `measured ≤ tolerance`.
    fn at_most(&mut self, suite: &'static str, name: &'static str, measured: f64, tolerance: f64) {
        self.checks.push(Check {
            suite,
            name,
            pass: measured <= tolerance,
            measured,
            tolerance,
        });
    }

    /// Passes when `measured ≥ tolerance`.
    fn at_least(&mut self, suite: &'static str, name: &'static str, measured: f64, tolerance: f64) {
        self.checks.push(Check {
            suite,
            name,
            pass: measured >= tolerance,
            measured,
            tolerance,
        });
    }
}

fn line(lo: f64, hi: f64, n: usize) -> Grid {
    Grid::cube(1, lo, hi, n).expect("valid grid")
}

fn square(n: usize) -> Grid {
    Grid::cube(2, -1.0, 1.0, n).expect("valid grid")
}

fn field(g: &Grid, f: impl Fn(&[f64]) -> f64) -> ScalarField {
    ScalarField::from_fn(g, f).expect("finite samples")
}

fn sup(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn quartic(x: &[f64]) -> f64 {
    0.5 * (x[0] * x[0] + x[1] * x[1]) + x[0].powi(4) / 12.0
}

fn convex_suite(run: &mut Run, input: Option<&ScalarField>) {
    const S: &str = "convex";
    let g = line(-2.0, 2.0, 201);
    let h = g.spacing();
    let f = ConvexPotential::certify(field(&g, |x| 0.5 * x[0] * x[0])).expect("convex");
    let star = legendre(&f, Some(&g)).expect("transform").field;
    let err = sup((0..g.len()).map(|k| (star.value(k) - 0.5 * g.coord(k)[0].powi(2)).abs()));
    run.at_most(S, "legendre_self_dual_quadratic", err, h * h);

    let g = line(-1.0, 1.0, 101);
    let f = ConvexPotential::certify(field(&g, |x| x[0].abs())).expect("convex");
    let star = legendre(&f, Some(&line(-1.0, 1.0, 41))).expect("transform").field;
    run.at_most(S, "legendre_abs_is_indicator", sup(star.values().iter().map(|v| v.abs())), 1e-12);

    let g = line(-1.0, 1.0, 201);
    let q = biconjugate_check(&field(&g, |x| x[0].powi(4))).expect("1D");
    run.at_most(S, "biconjugate_quartic", q, 5.0 * g.spacing());
    let g = line(-2.0, 2.0, 201);
    let w = biconjugate_check(&field(&g, |x| (x[0] * x[0] - 1.0).powi(2))).expect("1D");
    run.at_most(S, "biconjugate_double_well_envelope", w, 10.0 * g.spacing());

    let g = square(21);
    let para = convexity_check(&field(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])));
    run.at_most(S, "certifies_paraboloid", if para.is_certified() { 0.0 } else { 1.0 }, 0.0);
    let concave = convexity_check(&field(&g, |x| -(x[0] * x[0] + x[1] * x[1])));
    let rejected = match concave {
        ConvexityVerdict::Violated { violations, .. } => violations as f64,
        ConvexityVerdict::Certified { .. } => 0.0,
    };
    run.at_least(S, "rejects_concave_everywhere", rejected, g.interior().count() as f64);

    let g = line(-1.0, 1.0, 81);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (a, b, c) = (run.rng.gen_range(0.3..4.0), run.rng.gen_range(-1.0..1.0), run.rng.gen_range(0.0..0.5));
        let fx = |x: f64| 0.5 * a * x * x + b * x + c * x.powi(4);
        let f = ConvexPotential::certify(field(&g, |x| fx(x[0]))).expect("convex");
        let star = legendre(&f, None).expect("transform").field;
        let dual = star.grid();
        for j in 0..dual.len() {
            let s = dual.coord(j)[0];
            for k in 0..g.len() {
                let x = g.coord(k)[0];
                worst = worst.max(x * s - fx(x) - star.value(j));
            }
        }
    }
    run.at_most(S, "fenchel_young_random", worst, 1e-12);

    if let Some(u) = input {
        let deficit = match convexity_check(u) {
            ConvexityVerdict::Certified { .. } => 0.0,
            ConvexityVerdict::Violated { min_eigenvalue, tolerance, .. } => -min_eigenvalue - tolerance,
        };
        run.at_most(S, "input_convexity", deficit, 0.0);
    }
}

fn bound_excursion(h: &MatrixField, nodes: impl Iterator<Item = usize>) -> f64 {
    sup(nodes.map(|j| {
        let e = sym_eigen(h.at(j));
        (-1.0 - e.min()).max(e.max() - 1.0).max(0.0)
    }))
}

fn rotation_suite(run: &mut Run, input: Option<&ScalarField>, rotated: Option<&ScalarField>) {
    const S: &str = "rotation";
    let q = RotationAngle::quarter();
    let g = square(33);
    let r = rotate_unchecked(&field(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])), q).expect("rotation");
    let h = g.spacing();
    run.at_most(S, "paraboloid_rotates_to_zero", sup(r.potential().values().iter().map(|v| v.abs())), h * h);

    let g1 = line(-1.0, 1.0, 201);
    let r = rotate_unchecked(&field(&g1, |x| 1.5 * x[0] * x[0]), q).expect("rotation");
    let dual = r.potential().grid();
    let err = sup((0..dual.len()).map(|k| (r.potential().value(k) - 0.25 * dual.coord(k)[0].powi(2)).abs()));
    run.at_most(S, "steep_quadratic_quarter_curvature", err, 10.0 * g1.spacing());

    let g = square(41);
    let u = field(&g, |x| 0.5 * (3.0 * x[0] * x[0] + x[1] * x[1]));
    let r = rotate_unchecked(&u, q).expect("rotation");
    let dev = angle_shift_check(&u, &r).expect("matching").max_deviation;
    run.at_most(S, "angle_shift_constant_hessian", dev, 10.0 * g.spacing());

    let l = inverse_hessian_law(-1.0 / 3.0, q).expect("regular");
    run.at_most(S, "inverse_law_tangent_subtraction", (l.atan() - FRAC_PI_4 - (-1.0f64 / 3.0).atan()).abs(), 1e-12);

    let g = square(33);
    let tol = run.tol.unwrap_or_else(|| bound_tolerance(&g));
    let mut worst: f64 = 0.0;
    let mut order_excess = f64::NEG_INFINITY;
    for _ in 0..10 {
        let a: [f64; 3] = [run.rng.gen_range(0.2..2.0), run.rng.gen_range(-0.5..0.5), run.rng.gen_range(0.2..2.0)];
        let w: f64 = run.rng.gen_range(0.0..0.5);
        let t: f64 = run.rng.gen_range(0.0..PI);
        let lift: f64 = run.rng.gen_range(0.0..0.5);
        let form = move |x: &[f64]| {
            0.5 * ((a[0] + a[1].abs()) * x[0] * x[0] + 2.0 * a[1] * x[0] * x[1] + (a[2] + a[1].abs()) * x[1] * x[1])
                + w * (t.cos() * x[0] + t.sin() * x[1]).powi(4)
        };
        let u = field(&g, form);
        let r = rotate_unchecked(&u, q).expect("rotation");
        worst = worst.max(bound_excursion(r.hessian(), r.potential().grid().interior()));
        let v = field(&g, |x| form(x) + lift + 0.3 * (x[0] * x[0] + x[1] * x[1]));
        let report = order_preservation_check(&u, &v, q).expect("ordered pair");
        order_excess = order_excess.max(report.max_excess - report.tolerance);
    }
    run.at_most(S, "hessian_bounds_random", worst, tol);
    run.at_most(S, "order_preservation_random", order_excess, 0.0);

    if let Some(u) = input {
        let tol = run.tol.unwrap_or_else(|| bound_tolerance(u.grid()));
        match rotate_unchecked(u, q) {
            Ok(r) => {
                let e = bound_excursion(r.hessian(), r.potential().grid().interior());
                run.at_most(S, "input_hessian_bounds", e, tol);
            }
            Err(_) => run.at_most(S, "input_hessian_bounds", f64::INFINITY, tol),
        }
    }
    if let Some(ubar) = rotated {
        let tol = run.tol.unwrap_or_else(|| bound_tolerance(ubar.grid()));
        let e = bound_excursion(&hessian(ubar), ubar.grid().interior());
        run.at_most(S, "rotated_hessian_bounds", e, tol);
    }
}

fn random_sym(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SymMat {
    SymMat::from_fn(dim, |_, _| rng.gen_range(-scale..scale))
}

fn trace_product(a: &SymMat, b: &SymMat) -> f64 {
    let n = a.dim();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a.get(i, j) * b.get(i, j)).sum()
}

fn operator_suite(run: &mut Run) {
    const S: &str = "operator";
    let ex = (phase_of(&SymMat::identity(2)) - PI / 2.0)
        .abs()
        .max((phase_of(&SymMat::identity(3)) - 3.0 * FRAC_PI_4).abs())
        .max((phase_of(&SymMat::diagonal(&[3.0, 0.5])) - 3f64.atan() - 0.5f64.atan()).abs());
    run.at_most(S, "phase_examples", ex, 1e-10);

    let (mut sigma, mut lin, mut concave, mut spectrum) = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0.0f64);
    for k in 0..1000 {
        let dim = 2 + k % 2;
        let h = random_sym(&mut run.rng, dim, 2.0);
        sigma = sigma.max(sigma_form_residual(&h, phase_of(&h)).abs());
        let e = random_sym(&mut run.rng, dim, 1.0);
        let eps = 1e-5;
        let fd = (phase_of(&h.add(&e.scale(eps))) - phase_of(&h.sub(&e.scale(eps)))) / (2.0 * eps);
        let a = linearize(&h);
        let an = trace_product(&a, &e);
        lin = lin.max((fd - an).abs() / an.abs().max(1.0));
        let eig = sym_eigen(&a);
        spectrum = spectrum.max((eig.max() - 1.0).max(-eig.min()));
        let (p, q) = (random_sym(&mut run.rng, dim, 1.5).square(), random_sym(&mut run.rng, dim, 1.5).square());
        concave = concave.max(0.5 * (phase_of(&p) + phase_of(&q)) - phase_of(&p.add(&q).scale(0.5)));
    }
    run.at_most(S, "sigma_form_residual", sigma, 1e-10);
    run.at_most(S, "linearization_finite_differences", lin, 1e-5);
    run.at_most(S, "linearization_spectrum_in_unit_interval", spectrum, 0.0);
    run.at_most(S, "concavity_on_psd_pairs", concave, 1e-12);

    let mut ma: f64 = 0.0;
    for _ in 0..100 {
        let b: f64 = run.rng.gen_range(-1.0..1.0);
        let (a, d) = (run.rng.gen_range(0.5..3.0) + b.abs(), run.rng.gen_range(0.5..3.0) + b.abs());
        let h = SymMat::from_upper_triangle(2, &[a, b, d]).expect("three entries");
        ma = ma.max(ma_dual_residual(&h, (a * d - b * b).ln()).expect("positive definite").abs());
    }
    run.at_most(S, "ma_dual_log_determinant", ma, 1e-12);
}

fn geometry_suite(run: &mut Run, input: Option<&ScalarField>, phase: Option<&ScalarField>) {
    const S: &str = "geometry";
    let mut metric_defect: f64 = 0.0;
    let g3 = Grid::cube(2, 0.0, 1.0, 3).expect("valid grid");
    for _ in 0..200 {
        let m = random_sym(&mut run.rng, 2, 4.0);
        let metric = induced_metric(&MatrixField::from_fn(&g3, |_| m.clone()).expect("finite"));
        metric_defect = metric_defect.max(1.0 - sym_eigen(metric.g(0)).min()).max(1.0 - metric.sqrt_det(0));
    }
    run.at_most(S, "metric_dominates_identity", metric_defect, 1e-12);

    let g = square(17);
    let f = field(&g, |x| x[0] * x[0] + x[1] * x[1]);
    let flat = induced_metric(&MatrixField::from_fn(&g, |_| SymMat::zeros(2)).expect("finite"));
    let lb = laplace_beltrami(&f, &flat).expect("same grid");
    let fl = flat_laplacian(&f);
    let err = sup((0..g.len()).map(|k| (lb.value(k) - 4.0).abs().max((lb.value(k) - fl.value(k)).abs())));
    run.at_most(S, "flat_metric_laplacian", err, 1e-8);

    let mut gap = f64::INFINITY;
    for k in 0..10_000 {
        gap = gap.min(bm_convexity_gap(k as f64 / 9999.0).expect("in range"));
    }
    run.at_least(S, "bm_convexity_sweep", gap, -1e-12);

    let (u, psi) = match (input, phase) {
        (Some(u), Some(p)) => (u.clone(), p.clone()),
        (Some(u), None) => (u.clone(), ScalarField::constant(u.grid(), 1.0).expect("finite")),
        _ => {
            let g = square(33);
            let u = field(&g, quartic);
            let psi = field(&g, |x| (1.0 + x[0] * x[0]).atan() + FRAC_PI_4);
            (u, psi)
        }
    };
    let constant = PhaseField::new(ScalarField::constant(u.grid(), 1.3).expect("finite"), Regularity::C2Alpha);
    match mean_curvature(&u, &constant) {
        Ok(mc) => run.at_most(S, "mean_curvature_constant_phase", sup(mc.vector.values().iter().map(|v| v.abs())), 1e-10),
        Err(_) => run.at_most(S, "mean_curvature_constant_phase", f64::INFINITY, 1e-10),
    }
    if psi.grid() == u.grid() {
        let dpsi = gradient(&psi).norm();
        let mc = mean_curvature(&u, &PhaseField::new(psi, Regularity::C2Alpha)).expect("same grid");
        let excess = (0..u.grid().len())
            .map(|k| mc.norm.value(k) - dpsi.value(k))
            .fold(f64::NEG_INFINITY, f64::max);
        run.at_most(S, "mean_curvature_bounded_by_phase_gradient", excess, 1e-14);
    } else {
        run.at_most(S, "mean_curvature_bounded_by_phase_gradient", f64::INFINITY, 1e-14);
    }

    let g = square(21);
    let h = g.spacing();
    let constant = MatrixField::from_fn(&g, |_| SymMat::diagonal(&[2.0, -1.0])).expect("finite");
    let table = vmo_modulus(&constant, &[2.0 * h, 4.0 * h]).expect("radii ≥ 2h");
    run.at_most(S, "vmo_constant_field", sup(table.omega.iter().copied()), 0.0);

    let hu = u.grid().spacing();
    let radii: Vec<f64> = (2..=8).map(|k| k as f64 * hu).collect();
    let table = vmo_modulus(&hessian(&u), &radii).expect("radii ≥ 2h");
    let drop = table
        .per_radius
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0, f64::max);
    run.at_most(S, "vmo_nonincreasing_toward_2h", drop, 0.0);
    run.omega = Some(json!({"r": table.radii, "omega": table.omega, "per_radius": table.per_radius}));
}

fn solver_suite(run: &mut Run) {
    const S: &str = "solver";
    let opts = SolveOptions {
        tol: run.tol.unwrap_or(SolveOptions::default().tol),
        ..SolveOptions::default()
    };
    let g = square(33);
    match solve(&quadratic_problem(&g, 1.0).expect("valid problem"), &opts) {
        Ok((u, report)) => {
            let err = sup((0..g.len()).map(|k| {
                let x = g.coord(k);
                (u.value(k) - 0.5 * (x[0] * x[0] + x[1] * x[1])).abs()
            }));
            run.at_most(S, "constant_phase_quadratic_error", err, 1e-8);
            run.at_most(S, "constant_phase_quadratic_iterations", report.iterations as f64, 2.0);
        }
        Err(_) => {
            run.at_most(S, "constant_phase_quadratic_error", f64::INFINITY, 1e-8);
            run.at_most(S, "constant_phase_quadratic_iterations", f64::INFINITY, 2.0);
        }
    }

    let mut errors = Vec::new();
    let mut residual: f64 = 0.0;
    for n in [17, 33, 65] {
        let g = square(n);
        let psi = field(&g, |x| (1.0 + x[0] * x[0]).atan() + FRAC_PI_4);
        let p = DirichletProblem::new(
            PhaseField::new(psi, Regularity::C2Alpha),
            BoundaryData::from_fn(&g, quartic),
            lagrot::operator::OperatorVariant::Arctan,
        )
        .expect("valid problem");
        match solve(&p, &opts) {
            Ok((u, report)) => {
                residual = residual.max(report.final_residual);
                errors.push(sup((0..g.len()).map(|k| (u.value(k) - quartic(&g.coord(k)[..2])).abs())));
            }
            Err(_) => {
                residual = f64::INFINITY;
                errors.push(f64::INFINITY);
            }
        }
    }
    let order = errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);
    run.at_least(S, "manufactured_convergence_order", if order.is_nan() { 0.0 } else { order }, 1.8);
    run.at_most(S, "manufactured_final_residual", residual, opts.tol);
}

pub fn run(a: &VerifyArgs, g: &Global) -> Result<(), Failure> {
    if a.phase.is_some() && a.input.is_none() {
        return Err(Failure::new(exit::USAGE, "--phase needs --in"));
    }
    let input = a.input.as_deref().map(read_scalar).transpose()?;
    let phase = a.phase.as_deref().map(read_scalar).transpose()?;
    let rotated = a.rotated.as_deref().map(read_scalar).transpose()?;
    let mut run = Run {
        checks: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(g.seed),
        tol: g.tol,
        omega: None,
    };
    let all = a.suite == Suite::All;
    if all || a.suite == Suite::Convex {
        convex_suite(&mut run, input.as_ref());
    }
    if all || a.suite == Suite::Rotation {
        rotation_suite(&mut run, input.as_ref(), rotated.as_ref());
    }
    if all || a.suite == Suite::Operator {
        operator_suite(&mut run);
    }
    if all || a.suite == Suite::Geometry {
        geometry_suite(&mut run, input.as_ref(), phase.as_ref());
    }
    if all || a.suite == Suite::Solver {
        solver_suite(&mut run);
    }
    let passed = run.checks.iter().all(|c| c.pass);
    if let Some(path) = &a.report {
        let suite = format!("{:?}", a.suite).to_lowercase();
        let mut report = json!({
            "kind": "verify",
            "suite": suite,
            "seed": g.seed,
            "passed": passed,
            "checks": run.checks,
        });
        if let Some(omega) = run.omega.take() {
            report["omega"] = omega;
        }
        write_report(path, &report)?;
    }
    if !g.quiet {
        for c in &run.checks {
            println!(
                "{} {}/{}: {:.3e} (tolerance {:.3e})",
                if c.pass { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.measured,
                c.tolerance
            );
        }
    }
    if passed {
        Ok(())
    } else {
        let failed = run.checks.iter().filter(|c| !c.pass).count();
        Err(Failure::new(exit::VERIFY, format!("{failed} of {} checks failed", run.checks.len())))
    }
}
