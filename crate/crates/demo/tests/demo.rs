use std::f64::consts::FRAC_PI_4;

use lagrot_demo::{gap_curve, rotate_samples, solve_samples};

fn samples(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..n).map(|i| f(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn steep_quadratic_rotates_to_quarter_slope() {
    // u = 3x²/2 has λ = 3, so λ̄ = (3 − 1)/(1 + 3) = 1/2 and ū = x̄²/4.
    let r = rotate_samples(-1.0, 1.0, samples(-1.0, 1.0, 201, |x| 1.5 * x * x), FRAC_PI_4).unwrap();
    assert_eq!(r.x_bar.len(), r.u_bar.len());
    assert!(r.lambda_bar[0].is_nan() && r.lambda_bar.last().unwrap().is_nan());
    for (&xb, &ub) in r.x_bar.iter().zip(&r.u_bar) {
        assert!((ub - 0.25 * xb * xb).abs() < 1e-3, "ū({xb}) = {ub}");
    }
    let inner = &r.lambda_bar[1..r.lambda_bar.len() - 1];
    assert!(inner.iter().all(|l| (l - 0.5).abs() < 1e-2));
}

#[test]
fn concave_samples_are_rejected() {
    let err = rotate_samples(-1.0, 1.0, samples(-1.0, 1.0, 41, |x| -x * x), FRAC_PI_4).unwrap_err();
    assert!(err.contains("node"), "{err}");
}

#[test]
fn constant_phase_gives_parabola() {
    // arctan u″ = π/4 means u″ = 1.
    let s = solve_samples(-1.0, 1.0, vec![FRAC_PI_4; 41], 0.5, 0.5).unwrap();
    assert!(s.converged);
    for (&x, &u) in s.x.iter().zip(&s.u) {
        assert!((u - 0.5 * x * x).abs() < 1e-10);
    }
    assert!(*s.residuals.last().unwrap() <= 1e-8);
}

#[test]
fn phase_outside_range_is_an_error() {
    assert!(solve_samples(-1.0, 1.0, vec![2.0; 11], 0.0, 0.0).is_err());
}

#[test]
fn gap_curve_vanishes_at_the_ends() {
    let g = gap_curve(101);
    assert_eq!(g.t.len(), 101);
    assert!(g.gap[0].abs() < 1e-12 && g.gap[100].abs() < 1e-12);
    assert!(g.gap.iter().all(|&d| d >= -1e-15));
    assert!((g.b_bar[100] - 0.5 * std::f64::consts::LN_2).abs() < 1e-15);
}
