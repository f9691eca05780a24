use std::f64::consts::{FRAC_PI_2, LN_2};

use lagrot::convex::{legendre, ConvexPotential};
use lagrot::fields::{sym_eigen, Grid, MatrixField, ScalarField, SymMat};
use lagrot::geometry::{bm_convexity_gap, bm_value, induced_metric};
use lagrot::io::{scalar_from_json, scalar_to_json};
use lagrot::operator::{linearize, phase_of, sigma_form_residual};
use lagrot::rotation::{
    forward_hessian_law, inverse_hessian_law, inverse_hessian_law_matrix, order_preservation_check, RotationAngle,
};
use proptest::prelude::*;

fn sym(dim: usize, scale: f64) -> impl Strategy<Value = SymMat> {
    prop::collection::vec(-scale..scale, 6).prop_map(move |e| {
        let mut it = e.into_iter();
        let mut m = SymMat::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, it.next().unwrap());
            }
        }
        m
    })
}

fn any_sym(scale: f64) -> impl Strategy<Value = SymMat> {
    (2usize..=3).prop_flat_map(move |d| sym(d, scale))
}

fn angle() -> impl Strategy<Value = RotationAngle> {
    (0.05f64..1.5).prop_map(|a| RotationAngle::new(a).unwrap())
}

proptest! {
    #[test]
    fn eigen_decomposition_reconstructs(m in any_sym(5.0)) {
        let e = sym_eigen(&m);
        let norm = m.frobenius_norm().max(1.0);
        prop_assert!(e.reconstruct().sub(&m).frobenius_norm() <= 1e-10 * norm);
        prop_assert!((e.values().iter().sum::<f64>() - m.trace()).abs() <= 1e-10 * norm);
        prop_assert!(e.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn hessian_laws_invert_each_other(a in angle(), t in -0.999f64..0.999) {
        let l = inverse_hessian_law(t, a);
        // The inverse law is singular at λ̄ = cot α.
        if let Ok(l) = l {
            let back = forward_hessian_law(l, a);
            prop_assert!((back - t).abs() <= 1e-9 * (1.0 + l * l));
        }
    }

    #[test]
    fn forward_law_subtracts_the_angle(a in angle(), l in -50.0f64..50.0) {
        prop_assume!(l > -1.0 / a.tan() + 1e-3);
        let lb = forward_hessian_law(l, a);
        prop_assert!((lb.atan() - (l.atan() - a.alpha())).abs() <= 1e-10);
    }

    #[test]
    fn quarter_rotation_maps_convex_spectra_into_unit_interval(l in 0.0f64..1e6) {
        let lb = forward_hessian_law(l, RotationAngle::quarter());
        prop_assert!((-1.0..1.0).contains(&lb));
    }

    #[test]
    fn matrix_law_acts_eigenvaluewise(m in sym(2, 0.9)) {
        let q = RotationAngle::quarter();
        let e = sym_eigen(&m);
        prop_assume!(e.max() < 0.95);
        let h = inverse_hessian_law_matrix(&m, q).unwrap();
        let he = sym_eigen(&h);
        for (lb, l) in e.values().iter().zip(he.values()) {
            prop_assert!((inverse_hessian_law(*lb, q).unwrap() - l).abs() <= 1e-8 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn phase_stays_in_range_and_solves_sigma_form(m in any_sym(10.0)) {
        let n = m.dim() as f64;
        let c = phase_of(&m);
        prop_assert!(c.abs() < n * FRAC_PI_2);
        let scale: f64 = sym_eigen(&m).values().iter().map(|l| (1.0 + l * l).sqrt()).product();
        prop_assert!(sigma_form_residual(&m, c).abs() <= 1e-12 * scale);
    }

    #[test]
    fn linearization_is_positive_with_spectrum_in_unit_interval(m in any_sym(10.0)) {
        let e = sym_eigen(&linearize(&m));
        prop_assert!(e.min() > 0.0 && e.max() <= 1.0 + 1e-12);
    }

    #[test]
    fn phase_is_concave_on_positive_matrices(a in any_sym(1.5), b in any_sym(1.5)) {
        prop_assume!(a.dim() == b.dim());
        let (p, q) = (a.square(), b.square());
        let mid = phase_of(&p.add(&q).scale(0.5));
        prop_assert!(mid >= 0.5 * (phase_of(&p) + phase_of(&q)) - 1e-12);
        // Tangent plane lies above the graph.
        let d = linearize(&p);
        let dim = p.dim();
        let slope: f64 = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| d.get(i, j) * (q.get(i, j) - p.get(i, j)))
            .sum();
        prop_assert!(phase_of(&q) <= phase_of(&p) + slope + 1e-10);
    }

    #[test]
    fn induced_metric_dominates_identity(m in any_sym(4.0)) {
        let g = Grid::cube(m.dim(), 0.0, 1.0, 3).unwrap();
        let metric = induced_metric(&MatrixField::from_fn(&g, |_| m.clone()).unwrap());
        prop_assert!(sym_eigen(metric.g(0)).min() >= 1.0 - 1e-12);
        prop_assert!(metric.sqrt_det(0) >= 1.0 - 1e-12);
        prop_assert!(sym_eigen(metric.g_inv(0)).max() <= 1.0 + 1e-12);
    }

    #[test]
    fn bm_is_bounded_by_its_maximum(eigs in prop::collection::vec(-1.0f64..=1.0, 1..=3), m in 1usize..=3) {
        prop_assume!(m <= eigs.len());
        let b = bm_value(&eigs, m).unwrap();
        prop_assert!((0.0..=0.5 * LN_2 + 1e-15).contains(&b));
    }

    #[test]
    fn bm_convexity_gap_is_nonnegative(t in 0.0f64..=1.0) {
        prop_assert!(bm_convexity_gap(t).unwrap() >= -1e-12);
    }

    #[test]
    fn fenchel_young_holds_on_grids(a in 0.3f64..4.0, b in -1.0f64..1.0, w in 0.0f64..0.5) {
        let g = Grid::cube(1, -1.0, 1.0, 81).unwrap();
        let f = |x: f64| 0.5 * a * x * x + b * x + w * x.powi(4);
        let u = ConvexPotential::certify(ScalarField::from_fn(&g, |x| f(x[0])).unwrap()).unwrap();
        let star = legendre(&u, None).unwrap().field;
        let dual = star.grid();
        for j in 0..dual.len() {
            let s = dual.coord(j)[0];
            for k in (0..g.len()).step_by(8) {
                let x = g.coord(k)[0];
                prop_assert!(f(x) + star.value(j) >= x * s - 1e-12);
            }
        }
    }

    #[test]
    fn field_json_round_trips_exactly(values in prop::collection::vec(-1e6f64..1e6, 9)) {
        let g = Grid::cube(2, -1.0, 1.0, 3).unwrap();
        let f = ScalarField::new(g, values).unwrap();
        prop_assert_eq!(scalar_from_json(&scalar_to_json(&f)).unwrap(), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotation_preserves_order(a in 0.3f64..3.0, c in -0.5f64..0.5, lift in 0.0f64..1.0, bump in 0.0f64..2.0) {
        let g = Grid::cube(1, -1.0, 1.0, 129).unwrap();
        let u = ScalarField::from_fn(&g, |x| 0.5 * a * x[0] * x[0] + 0.1 * x[0].exp()).unwrap();
        let v = ScalarField::from_fn(&g, |x| {
            0.5 * a * x[0] * x[0] + 0.1 * x[0].exp() + lift + bump * (x[0] - c).powi(2)
        }).unwrap();
        let report = order_preservation_check(&u, &v, RotationAngle::quarter()).unwrap();
        prop_assert!(report.holds(), "{:?}", report);
    }
}
