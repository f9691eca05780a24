use std::f64::consts::LN_2;

use lagrot::fields::{hessian, Grid, MatrixField, ScalarField, SymMat, VectorField};
use lagrot::geometry::{
    bm_convexity_gap, bm_quantity, bm_value, flat_laplacian, induced_metric, laplace_beltrami,
    laplace_beltrami_nondivergence, mean_curvature, rotated_phase_hessian_terms, vmo_modulus, GeometryError,
};
use lagrot::operator::{PhaseField, Regularity};
use lagrot::rotation::{rotate_unchecked, RotationAngle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn smooth_hessian(x: &[f64]) -> SymMat {
    // D² of (x₁² + x₂²)/2 + x₁⁴/12 + 0.3 sin(x₁ + 2x₂).
    let s = 0.3 * (x[0] + 2.0 * x[1]).sin();
    SymMat::from_upper_triangle(2, &[1.0 + x[0] * x[0] - s, -2.0 * s, 1.0 - 4.0 * s]).unwrap()
}

fn test_function(x: &[f64]) -> f64 {
    (x[0] - 0.5 * x[1]).exp() * (1.0 + x[1] * x[1])
}

fn beltrami_on(n: usize) -> ScalarField {
    let g = Grid::cube(2, -1.0, 1.0, n).unwrap();
    let metric = induced_metric(&MatrixField::from_fn(&g, smooth_hessian).unwrap());
    laplace_beltrami(&ScalarField::from_fn(&g, test_function).unwrap(), &metric).unwrap()
}

#[test]
fn metric_of_diagonal_hessian() {
    let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
    let m = induced_metric(&MatrixField::from_fn(&g, |_| SymMat::diagonal(&[3.0, 0.5])).unwrap());
    for k in 0..g.len() {
        assert!((m.g(k).get(0, 0) - 10.0).abs() < 1e-12 && (m.g(k).get(1, 1) - 1.25).abs() < 1e-12);
        assert!((m.g_inv(k).get(0, 0) - 0.1).abs() < 1e-12 && (m.g_inv(k).get(1, 1) - 0.8).abs() < 1e-12);
        assert!((m.sqrt_det(k) - 12.5f64.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn flat_metric_gives_the_flat_laplacian() {
    for dim in [1, 2, 3] {
        let g = Grid::cube(dim, -1.0, 1.0, 9).unwrap();
        let f = ScalarField::from_fn(&g, |x| x.iter().map(|v| v * v).sum()).unwrap();
        let metric = induced_metric(&MatrixField::from_fn(&g, |_| SymMat::zeros(dim)).unwrap());
        let lb = laplace_beltrami(&f, &metric).unwrap();
        let flat = flat_laplacian(&f);
        for k in 0..g.len() {
            assert!((lb.value(k) - 2.0 * dim as f64).abs() < 1e-8);
            assert!((lb.value(k) - flat.value(k)).abs() < 1e-8);
        }
    }
}

#[test]
fn beltrami_converges_at_second_order() {
    let reference = beltrami_on(129);
    let rg = reference.grid();
    let error = |coarse: &ScalarField| {
        let g = coarse.grid();
        (0..g.len())
            .map(|k| (coarse.value(k) - reference.value(rg.nearest(&g.coord(k)[..2]))).abs())
            .fold(0.0, f64::max)
    };
    let (e17, e33) = (error(&beltrami_on(17)), error(&beltrami_on(33)));
    let order = (e17 / e33).log2();
    assert!(order >= 1.8, "errors {e17:.3e}, {e33:.3e}, order {order:.2}");
}

#[test]
fn divergence_and_nondivergence_forms_agree_to_first_order() {
    let gap = |n: usize| {
        let g = Grid::cube(2, -1.0, 1.0, n).unwrap();
        let metric = induced_metric(&MatrixField::from_fn(&g, smooth_hessian).unwrap());
        let f = ScalarField::from_fn(&g, test_function).unwrap();
        let a = laplace_beltrami(&f, &metric).unwrap();
        let b = laplace_beltrami_nondivergence(&f, &metric).unwrap();
        g.interior().map(|k| (a.value(k) - b.value(k)).abs()).fold(0.0, f64::max) / g.spacing()
    };
    let (c1, c2) = (gap(33), gap(65));
    assert!(c2 <= 1.2 * c1, "gap/h went from {c1:.3e} to {c2:.3e}");
}

#[test]
fn mean_curvature_of_linear_phase_on_paraboloid() {
    let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
    let u = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
    let psi = PhaseField::new(ScalarField::from_fn(&g, |x| x[0]).unwrap(), Regularity::C2Alpha);
    let mc = mean_curvature(&u, &psi).unwrap();
    for k in 0..g.len() {
        assert!((mc.norm.value(k) - 0.5f64.sqrt()).abs() <= 10.0 * g.spacing());
    }
}

#[test]
fn bm_matches_scalar_recomputation() {
    let half_ln2 = 0.5 * LN_2;
    assert!((bm_value(&[1.0, 0.5], 1).unwrap() - half_ln2).abs() < 1e-15);
    assert!((bm_value(&[1.0, 1.0], 2).unwrap() - half_ln2).abs() < 1e-15);
    assert!(matches!(bm_value(&[0.1, 0.2], 3), Err(GeometryError::Multiplicity { .. })));

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let g = Grid::cube(2, 0.0, 1.0, 5).unwrap();
    let values: Vec<f64> = (0..3 * g.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let eig = VectorField::new(g.clone(), 3, values.clone()).unwrap();
    for m in 1..=3 {
        let q = bm_quantity(&eig, m).unwrap();
        for k in 0..g.len() {
            let mut node = values[3 * k..3 * k + 3].to_vec();
            node.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let oracle: f64 = node[..m].iter().map(|l| (1.0 + l * l).ln()).sum::<f64>() / (2.0 * m as f64);
            assert!((q.values.value(k) - oracle).abs() < 1e-14);
            assert!(q.gap.value(k) >= 0.0);
        }
    }
}

#[test]
fn convexity_gap_on_a_coarse_sweep() {
    for k in 0..=100 {
        assert!(bm_convexity_gap(0.01 * k as f64).unwrap() >= -1e-15);
    }
    assert!(bm_convexity_gap(1.5).is_err());
}

#[test]
fn constant_phase_has_no_chain_rule_terms() {
    let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
    let u = ScalarField::from_fn(&g, |x| 0.5 * (2.0 * x[0] * x[0] + x[1] * x[1]) + 0.1 * x[0].powi(4)).unwrap();
    let psi = PhaseField::new(ScalarField::constant(&g, 1.1).unwrap(), Regularity::C2Alpha);
    let r = rotate_unchecked(&u, RotationAngle::quarter()).unwrap();
    let nodes = r.image_nodes_within(0.25);
    assert!(!nodes.is_empty());
    for t in rotated_phase_hessian_terms(&psi, &r, &nodes).unwrap() {
        for term in &t.terms {
            assert!(term.transport.abs() < 1e-9 && term.zeroth.abs() < 1e-9 && term.direct.abs() < 1e-9);
        }
    }
}

#[test]
fn vmo_rejects_small_radii_and_vanishes_on_constants() {
    let g = Grid::cube(2, -1.0, 1.0, 21).unwrap();
    let h = g.spacing();
    let m = MatrixField::from_fn(&g, |_| SymMat::diagonal(&[2.0, -1.0])).unwrap();
    assert!(matches!(vmo_modulus(&m, &[h]), Err(GeometryError::RadiusTooSmall { .. })));
    let t = vmo_modulus(&m, &[2.0 * h, 4.0 * h]).unwrap();
    assert_eq!(t.omega, vec![0.0, 0.0]);
}

#[test]
fn vmo_of_smooth_hessian_grows_with_radius() {
    let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
    let h = g.spacing();
    let u = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]) + x[0].powi(4) / 12.0).unwrap();
    let radii: Vec<f64> = (2..=6).map(|k| k as f64 * h).collect();
    let t = vmo_modulus(&hessian(&u), &radii).unwrap();
    assert!(t.omega.windows(2).all(|w| w[0] <= w[1]));
    assert!(t.omega[0] > 0.0);
}
