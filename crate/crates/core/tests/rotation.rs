use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use lagrot::convex::ConvexPotential;
use lagrot::fields::{Grid, ScalarField};
use lagrot::operator::{PhaseField, Regularity};
use lagrot::rotation::{
    angle_shift_check, inverse_hessian_law, order_preservation_check, rotate, rotate_on, rotate_unchecked,
    rotate_upward, rotated_phase, RotationAngle, RotationError,
};

fn q() -> RotationAngle {
    RotationAngle::quarter()
}

/// `ū(x̄) = ((c/2)x̄² − sup_x [x x̄ − ũ(x)]) / s` with the sup taken over a
/// dense sample of the source interval.
fn rotated_by_brute_force(u: impl Fn(f64) -> f64, lo: f64, hi: f64, xb: f64) -> f64 {
    let (c, s) = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    let samples = 20_001;
    let star = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .map(|x| x * xb - (s * u(x) + 0.5 * c * x * x))
        .fold(f64::NEG_INFINITY, f64::max);
    (0.5 * c * xb * xb - star) / s
}

#[test]
fn steep_quadratic_rotates_to_quarter_curvature() {
    let g = Grid::cube(1, -1.0, 1.0, 201).unwrap();
    let h = g.spacing();
    let u = ScalarField::from_fn(&g, |x| 1.5 * x[0] * x[0]).unwrap();
    let r = rotate(&ConvexPotential::certify(u).unwrap(), q()).unwrap();
    let dual = r.potential().grid();
    for k in 0..dual.len() {
        let xb = dual.coord(k)[0];
        let got = r.potential().value(k);
        assert!((got - 0.25 * xb * xb).abs() <= 10.0 * h);
        assert!((got - rotated_by_brute_force(|x| 1.5 * x * x, -1.0, 1.0, xb)).abs() <= 10.0 * h);
    }
}

#[test]
fn half_norm_squared_rotates_to_zero_in_any_dimension() {
    for dim in 1..=3 {
        let n = if dim == 3 { 13 } else { 41 };
        let g = Grid::cube(dim, -1.0, 1.0, n).unwrap();
        let h = g.spacing();
        let u = ScalarField::from_fn(&g, |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>()).unwrap();
        let r = rotate(&ConvexPotential::certify(u.clone()).unwrap(), q()).unwrap();
        assert!(r.potential().values().iter().all(|v| v.abs() <= h * h), "dim {dim}");
        if dim <= 2 {
            assert!(angle_shift_check(&u, &r).unwrap().max_deviation <= 1e-8);
        }
    }
}

#[test]
fn angle_shift_of_quartic_is_first_order() {
    let constant = |n: usize| {
        let g = Grid::cube(1, -1.0, 1.0, n).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0].powi(4) / 12.0 + 0.5 * x[0] * x[0]).unwrap();
        let r = rotate_unchecked(&u, q()).unwrap();
        angle_shift_check(&u, &r).unwrap().max_deviation / g.spacing()
    };
    let (c1, c2) = (constant(129), constant(257));
    assert!(c2 <= 1.2 * c1, "C grew from {c1} to {c2}");
}

#[test]
fn constant_anisotropic_hessian_shifts_both_angles() {
    let g = Grid::cube(2, -1.0, 1.0, 41).unwrap();
    let u = ScalarField::from_fn(&g, |x| 0.5 * (3.0 * x[0] * x[0] + x[1] * x[1])).unwrap();
    let r = rotate(&ConvexPotential::certify(u.clone()).unwrap(), q()).unwrap();
    assert!(angle_shift_check(&u, &r).unwrap().max_deviation <= 10.0 * g.spacing());
    // λ̄ = (λ − 1)/(λ + 1): 1/2 and 0.
    for &j in r.image_nodes() {
        let m = r.hessian().at(j);
        assert!((m.get(0, 0) - 0.5).abs() < 1e-6 && m.get(1, 1).abs() < 1e-6);
    }
}

#[test]
fn inverse_law_satisfies_tangent_subtraction() {
    let l = inverse_hessian_law(-1.0 / 3.0, q()).unwrap();
    assert!((l - 0.5).abs() < 1e-12);
    assert!((0.5f64.atan() - FRAC_PI_4 - (-1.0f64 / 3.0).atan()).abs() < 1e-12);
}

#[test]
fn critical_constant_phase_rotates_to_zero() {
    let g = Grid::cube(2, -1.0, 1.0, 21).unwrap();
    let u = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + 2.0 * x[1] * x[1])).unwrap();
    let psi = PhaseField::new(ScalarField::constant(&g, 2.0 * FRAC_PI_4).unwrap(), Regularity::C2Alpha);
    let r = rotate_unchecked(&u, q()).unwrap();
    let rp = rotated_phase(&psi, &r).unwrap();
    assert!(rp.field.values().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn constant_offset_passes_through_as_unit_gap() {
    let g = Grid::cube(1, -1.0, 1.0, 101).unwrap();
    let u = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0] + 0.2 * x[0].exp()).unwrap();
    let v = u.map(|x| x + 1.0).unwrap();
    let ru = rotate_unchecked(&u, q()).unwrap();
    let rv = rotate_on(&v, q(), ru.potential().grid()).unwrap();
    for (a, b) in ru.potential().values().iter().zip(rv.potential().values()) {
        assert!((b - a - 1.0).abs() < 1e-12);
    }
    assert!(order_preservation_check(&u, &v, q()).unwrap().holds());
}

#[test]
fn quartic_lift_stays_above_on_shared_nodes() {
    let g = Grid::cube(1, -1.0, 1.0, 201).unwrap();
    let h = g.spacing();
    let u = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0]).unwrap();
    let v = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0] + x[0].powi(4)).unwrap();
    let report = order_preservation_check(&u, &v, q()).unwrap();
    assert!(report.holds(), "{report:?}");
    // Oracle: the same comparison with both rotations done by brute force.
    for k in 0..=20 {
        let xb = -0.6 + 0.06 * k as f64;
        let bu = rotated_by_brute_force(|x| 0.5 * x * x, -1.0, 1.0, xb);
        let bv = rotated_by_brute_force(|x| 0.5 * x * x + x.powi(4), -1.0, 1.0, xb);
        assert!(bu <= bv + 10.0 * h);
    }
}

#[test]
fn nonconvex_input_is_rejected() {
    let g = Grid::cube(1, -1.0, 1.0, 21).unwrap();
    let u = ScalarField::from_fn(&g, |x| -x[0] * x[0]).unwrap();
    assert!(ConvexPotential::certify(u).is_err());
}

#[test]
fn upward_rotation_undoes_downward_rotation() {
    let g = Grid::cube(1, -1.0, 1.0, 257).unwrap();
    let f = |x: f64| 0.5 * x * x + 0.1 * x.exp();
    let u = ScalarField::from_fn(&g, |x| f(x[0])).unwrap();
    let r = rotate_unchecked(&u, q()).unwrap();
    let back = rotate_upward(&r).unwrap();
    let bg = back.grid();
    let mut worst: f64 = 0.0;
    for k in bg.interior() {
        let x = bg.coord(k)[0];
        if x.abs() < 0.8 {
            worst = worst.max((back.value(k) - f(x)).abs());
        }
    }
    assert!(worst < 1e-4, "round trip error {worst}");
}

#[test]
fn upward_rotation_refuses_near_singular_potentials() {
    let g = Grid::cube(1, -1.0, 1.0, 129).unwrap();
    let u = ScalarField::from_fn(&g, |x| x[0].abs()).unwrap();
    let r = rotate_unchecked(&u, q()).unwrap();
    assert!(matches!(rotate_upward(&r), Err(RotationError::UpwardDomain { .. })));
}
