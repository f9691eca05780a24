use lagrot::convex::{
    biconjugate_check, convexity_check, legendre, slope_preimage, strict_convexity_gap, subdifferential,
    ConvexPotential,
};
use lagrot::fields::{Grid, ScalarField};

fn line(lo: f64, hi: f64, n: usize) -> Grid {
    Grid::cube(1, lo, hi, n).unwrap()
}

fn potential(g: &Grid, f: impl Fn(f64) -> f64) -> ConvexPotential {
    ConvexPotential::certify(ScalarField::from_fn(g, |x| f(x[0])).unwrap()).unwrap()
}

/// Brute-force sup of `x·s − f(x)` over a uniform sample of the interval.
fn sup_oracle(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize, s: f64) -> f64 {
    (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .map(|x| x * s - f(x))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn half_square_is_self_dual() {
    let g = line(-2.0, 2.0, 201);
    let h = g.spacing();
    let dual = line(-2.0, 2.0, 201);
    let star = legendre(&potential(&g, |x| 0.5 * x * x), Some(&dual)).unwrap();
    assert!(star.certified);
    for k in 0..dual.len() {
        let s = dual.coord(k)[0];
        assert!((star.field.value(k) - 0.5 * s * s).abs() <= h * h);
    }
}

#[test]
fn scaling_law_for_quadratics() {
    let g = line(-2.0, 2.0, 201);
    let dual = line(-3.0, 3.0, 121);
    let star = legendre(&potential(&g, |x| x * x), Some(&dual)).unwrap();
    for k in 0..dual.len() {
        let s = dual.coord(k)[0];
        assert!((star.field.value(k) - s * s / 4.0).abs() <= 1e-3);
    }
}

#[test]
fn abs_conjugates_to_indicator_of_unit_interval() {
    let g = line(-1.0, 1.0, 101);
    let dual = line(-1.0, 1.0, 41);
    let star = legendre(&potential(&g, f64::abs), Some(&dual)).unwrap();
    assert!(star.field.values().iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn exponential_matches_brute_force_sup_on_finer_grid() {
    let g = line(0.0, 2.0, 201);
    let h = g.spacing();
    let e2 = 2f64.exp();
    let dual = line(1.2, e2 - 0.2, 61);
    let star = legendre(&potential(&g, f64::exp), Some(&dual)).unwrap();
    for k in 0..dual.len() {
        let s = dual.coord(k)[0];
        let oracle = sup_oracle(f64::exp, 0.0, 2.0, 2001, s);
        assert!((star.field.value(k) - oracle).abs() <= 10.0 * h);
        assert!((star.field.value(k) - (s * s.ln() - s)).abs() <= 10.0 * h);
    }
}

#[test]
fn biconjugate_examples() {
    let g = line(-1.0, 1.0, 201);
    let h = g.spacing();
    let quartic = ScalarField::from_fn(&g, |x| x[0].powi(4)).unwrap();
    assert!(biconjugate_check(&quartic).unwrap() <= 5.0 * h);
    let square = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0]).unwrap();
    assert!(biconjugate_check(&square).unwrap() <= h * h);

    let wide = line(-2.0, 2.0, 201);
    let well = ScalarField::from_fn(&wide, |x| (x[0] * x[0] - 1.0).powi(2)).unwrap();
    assert!(biconjugate_check(&well).unwrap() <= 10.0 * wide.spacing());
}

#[test]
fn quartic_dip_is_repaired_by_the_analytic_shift() {
    let g = line(-1.0, 1.0, 101);
    let dipped = ScalarField::from_fn(&g, |x| x[0].powi(4) - 0.01 * x[0] * x[0]).unwrap();
    assert!(!convexity_check(&dipped).is_certified());
    // f'' = 12x² − 0.02 ≥ −0.02, so adding 0.01·c·x² with c = 2 restores f'' ≥ 0.
    let repaired = ScalarField::from_fn(&g, |x| x[0].powi(4) - 0.01 * x[0] * x[0] + 0.01 * x[0] * x[0]).unwrap();
    assert!(convexity_check(&repaired).is_certified());
}

#[test]
fn subdifferential_of_abs_is_the_unit_interval() {
    let g = line(-1.0, 1.0, 101);
    let f = potential(&g, f64::abs);
    let b = subdifferential(&f, 50);
    assert!(b.contains(&[-1.0], g.spacing()) && b.contains(&[1.0], g.spacing()));
    assert!(!b.contains(&[1.5], g.spacing()));
}

#[test]
fn strict_gap_is_zero_for_identical_potentials_and_positive_for_offsets() {
    let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
    let u = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + 2.0 * x[1] * x[1])).unwrap();
    let pu = ConvexPotential::certify(u.clone()).unwrap();
    let slope = [0.3, -0.4];
    let a = slope_preimage(&u, &slope);
    assert_eq!(strict_convexity_gap(&pu, &pu, a, a, &slope).unwrap(), 0.0);

    let v = u.map(|x| x + 0.1).unwrap();
    let pv = ConvexPotential::certify(v.clone()).unwrap();
    let b = slope_preimage(&v, &slope);
    assert!(strict_convexity_gap(&pu, &pv, a, b, &slope).unwrap() >= 0.0);
}
