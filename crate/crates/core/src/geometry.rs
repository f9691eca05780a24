//! Geometry of the gradient graph `{(x, Du(x))}`: induced metric, mean
//! curvature, Laplace–Beltrami operator, the quantity `b̄ₘ` and a VMO modulus.

use crate::fields::{
    gradient, hessian, stencil_d1, stencil_d2, sym_eigen, FieldError, Grid, MatrixField, ScalarField, SymMat,
    VectorField, MAX_DIM,
};
use crate::operator::PhaseField;
use crate::rotation::RotatedPotential;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("argument {0} is outside [0, 1]")]
    Domain(f64),
    #[error("radius {radius} is below the smallest resolvable radius {min}")]
    RadiusTooSmall { radius: f64, min: f64 },
    #[error("multiplicity {m} is not in 1..={available}")]
    Multiplicity { m: usize, available: usize },
    #[error("stencil around dual node {node} leaves the image of the source domain")]
    OutsideImage { node: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `g = I + H²` per node, with `g⁻¹` and `√det g`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedMetric {
    grid: Grid,
    g: Vec<SymMat>,
    g_inv: Vec<SymMat>,
    sqrt_det: Vec<f64>,
}

impl InducedMetric {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn g(&self, node: usize) -> &SymMat {
        &self.g[node]
    }

    pub fn g_inv(&self, node: usize) -> &SymMat {
        &self.g_inv[node]
    }

    pub fn sqrt_det(&self, node: usize) -> f64 {
        self.sqrt_det[node]
    }
}

pub fn induced_metric(h: &MatrixField) -> InducedMetric {
    let n = h.grid().dim();
    let mut g = Vec::with_capacity(h.values().len());
    let mut g_inv = Vec::with_capacity(h.values().len());
    let mut sqrt_det = Vec::with_capacity(h.values().len());
    for m in h.values() {
        let eig = sym_eigen(m);
        g.push(SymMat::identity(n).add(&m.square()));
        g_inv.push(m.map_spectrum(|l| 1.0 / (1.0 + l * l)));
        sqrt_det.push(eig.values().iter().map(|l| (1.0 + l * l).sqrt()).product());
    }
    InducedMetric {
        grid: h.grid().clone(),
        g,
        g_inv,
        sqrt_det,
    }
}

/// Ambient mean curvature vector and its length.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurvature {
    /// `2n` components per node: `(−D²u·v, v)` with `v = g⁻¹Dψ`.
    pub vector: VectorField,
    /// `|∇_gψ|_g = (Dψᵀ g⁻¹ Dψ)^{1/2}`.
    pub norm: ScalarField,
}

/// `H⃗ = J ∇_gψ` on the graph of `Du`. The tangent vector `∇_gψ` has
/// coordinates `v = g⁻¹Dψ` and sits in `ℝ²ⁿ` as `(v, D²u·v)`; `J(a, b) = (−b, a)`.
pub fn mean_curvature(u: &ScalarField, psi: &PhaseField) -> Result<MeanCurvature, GeometryError> {
    let grid = u.grid();
    if grid != psi.field().grid() {
        return Err(FieldError::GridMismatch.into());
    }
    let n = grid.dim();
    let hess = hessian(u);
    let dpsi = gradient(psi.field());
    let mut vector = Vec::with_capacity(grid.len() * 2 * n);
    let mut norm = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let h = hess.at(k);
        let g_inv = h.map_spectrum(|l| 1.0 / (1.0 + l * l));
        let d = dpsi.at(k);
        let v = g_inv.mul_vec(d);
        let hv = h.mul_vec(&v[..n]);
        vector.extend((0..n).map(|a| -hv[a]));
        vector.extend_from_slice(&v[..n]);
        norm.push(g_inv.quad_form(d).max(0.0).sqrt());
    }
    Ok(MeanCurvature {
        vector: VectorField::new(grid.clone(), 2 * n, vector)?,
        norm: ScalarField::new(grid.clone(), norm)?,
    })
}

/// `Δ_g f = (1/√g) ∂ᵢ(√g gⁱʲ ∂ⱼ f)` in divergence form.
///
/// Diagonal fluxes use the compact three-point stencil with coefficients
/// averaged to half nodes; mixed fluxes are central differences of
/// `√g gⁱʲ ∂ⱼ f`. With `g = I` this is the standard `(2n+1)`-point Laplacian.
/// Boundary nodes fall back to [`laplace_beltrami_nondivergence`].
pub fn laplace_beltrami(f: &ScalarField, metric: &InducedMetric) -> Result<ScalarField, GeometryError> {
    let grid = f.grid();
    if grid != metric.grid() {
        return Err(FieldError::GridMismatch.into());
    }
    let n = grid.dim();
    let h = grid.spacing();
    let v = f.values();
    let w = |k: usize, i: usize, j: usize| metric.sqrt_det[k] * metric.g_inv[k].get(i, j);
    let fallback = laplace_beltrami_nondivergence(f, metric)?;
    let mut out = fallback.into_values();
    for k in grid.interior() {
        let mut acc = 0.0;
        for i in 0..n {
            let st = grid.stride(i);
            let (p, m) = (k + st, k - st);
            let wp = 0.5 * (w(k, i, i) + w(p, i, i));
            let wm = 0.5 * (w(k, i, i) + w(m, i, i));
            acc += (wp * (v[p] - v[k]) - wm * (v[k] - v[m])) / (h * h);
            for j in (0..n).filter(|&j| j != i) {
                let flux = |node: usize| w(node, i, j) * stencil_d1(grid, v, node, j);
                acc += (flux(p) - flux(m)) / (2.0 * h);
            }
        }
        out[k] = acc / metric.sqrt_det[k];
    }
    Ok(ScalarField::new(grid.clone(), out)?)
}

/// `gⁱʲ ∂ᵢⱼ f + (1/√g) ∂ᵢ(√g gⁱʲ) ∂ⱼ f` with second-order stencils everywhere.
pub fn laplace_beltrami_nondivergence(
    f: &ScalarField,
    metric: &InducedMetric,
) -> Result<ScalarField, GeometryError> {
    let grid = f.grid();
    if grid != metric.grid() {
        return Err(FieldError::GridMismatch.into());
    }
    let n = grid.dim();
    let v = f.values();
    let fh = hessian(f);
    let coeff: Vec<Vec<f64>> = (0..n * n)
        .map(|ij| {
            let (i, j) = (ij / n, ij % n);
            (0..grid.len())
                .map(|k| metric.sqrt_det[k] * metric.g_inv[k].get(i, j))
                .collect()
        })
        .collect();
    let out = (0..grid.len())
        .map(|k| {
            let gi = &metric.g_inv[k];
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let dcoef = stencil_d1(grid, &coeff[i * n + j], k, i);
                    acc += gi.get(i, j) * fh.at(k).get(i, j)
                        + dcoef * stencil_d1(grid, v, k, j) / metric.sqrt_det[k];
                }
            }
            acc
        })
        .collect();
    Ok(ScalarField::new(grid.clone(), out)?)
}

/// Flat Laplacian with the same boundary stencils as the Hessian.
pub fn flat_laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let values = (0..grid.len())
        .map(|k| (0..grid.dim()).map(|a| stencil_d2(grid, f.values(), k, a)).sum())
        .collect();
    ScalarField::new(grid.clone(), values).expect("finite input gives finite differences")
}

/// `b̄(t) = ln √(1 + t²)`.
pub fn b_bar(t: f64) -> f64 {
    0.5 * t.mul_add(t, 1.0).ln()
}

/// `b̄″(t) = (1 − t²)/(1 + t²)²`.
pub fn b_bar_second(t: f64) -> f64 {
    let q = 1.0 + t * t;
    (1.0 - t * t) / (q * q)
}

/// `b̄ₘ` at the largest admissible value: `ln √2`.
pub fn bm_max() -> f64 {
    0.5 * std::f64::consts::LN_2
}

/// `(1/m) Σ ln √(1 + λ̄ₖ²)` over the `m` largest of `eigenvalues`.
pub fn bm_value(eigenvalues: &[f64], m: usize) -> Result<f64, GeometryError> {
    if m == 0 || m > eigenvalues.len() {
        return Err(GeometryError::Multiplicity {
            m,
            available: eigenvalues.len(),
        });
    }
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[sorted.len() - m..].iter().map(|&l| b_bar(l)).sum::<f64>() / m as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPrincipleQuantity {
    pub m: usize,
    pub values: ScalarField,
    /// `ln √2 − b̄ₘ`.
    pub gap: ScalarField,
}

/// `b̄ₘ` per node of an eigenvalue field.
pub fn bm_quantity(eigenvalues: &VectorField, m: usize) -> Result<MaxPrincipleQuantity, GeometryError> {
    let grid = eigenvalues.grid();
    let values = (0..grid.len())
        .map(|k| bm_value(eigenvalues.at(k), m))
        .collect::<Result<Vec<_>, _>>()?;
    let gap = values.iter().map(|b| bm_max() - b).collect();
    Ok(MaxPrincipleQuantity {
        m,
        values: ScalarField::new(grid.clone(), values)?,
        gap: ScalarField::new(grid.clone(), gap)?,
    })
}

/// `C (b̄(1) − b̄(t))² − (1 − t)²` with `C = 1/b̄(1)²`; nonnegative on `[0, 1]`
/// by convexity of `b̄`, and zero at both ends.
pub fn bm_convexity_gap(t: f64) -> Result<f64, GeometryError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::Domain(t));
    }
    let top = bm_max();
    let d = (top - b_bar(t)) / top;
    Ok(d * d - (1.0 - t) * (1.0 - t))
}

/// Second derivative of `ψ̄` along one eigendirection of `D²ū`, by the chain
/// rule and directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseHessianTerms {
    pub lambda_bar: f64,
    /// `−s · Dψ · ∇_x̄ (eᵢᵀ D²ū eᵢ)`.
    pub transport: f64,
    /// `eᵢᵀ D²ψ eᵢ · (c − s λ̄ᵢ)²`.
    pub zeroth: f64,
    /// `eᵢᵀ D²ψ̄ eᵢ` from differences of `ψ̄` on the dual grid.
    pub direct: f64,
}

impl PhaseHessianTerms {
    pub fn discrepancy(&self) -> f64 {
        (self.transport + self.zeroth - self.direct).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePhaseTerms {
    pub node: usize,
    /// One entry per eigenvalue of `D²ū`, ascending.
    pub terms: Vec<PhaseHessianTerms>,
    /// Two eigenvalues agree within `1e-6`; the eigenbasis is then one of many,
    /// and the terms refer to that particular basis.
    pub frame_ambiguous: bool,
}

/// Chain-rule decomposition of `ψ̄_{īī}` at the given dual nodes, for
/// `ψ̄(x̄) = ψ(c·x̄ − s·Dū(x̄)) − nα`. Values of `ψ` and its derivatives at
/// preimages come from cubic interpolation.
pub fn rotated_phase_hessian_terms(
    psi: &PhaseField,
    rotated: &RotatedPotential,
    nodes: &[usize],
) -> Result<Vec<NodePhaseTerms>, GeometryError> {
    let pg = psi.field().grid();
    let dual = rotated.potential().grid();
    let n = dual.dim();
    if pg.dim() != n {
        return Err(FieldError::Arity {
            expected: n,
            got: pg.dim(),
        }
        .into());
    }
    let (c, s) = (rotated.angle().cos(), rotated.angle().sin());
    let hb = dual.spacing();
    let dpsi = gradient(psi.field());
    let dpsi: Vec<ScalarField> = (0..n).map(|a| dpsi.component(a)).collect();
    let d2psi = hessian(psi.field());
    let d2psi: Vec<ScalarField> = (0..n * n).map(|ij| d2psi.entry(ij / n, ij % n)).collect();
    let psi_at = |j: usize| -> Result<f64, GeometryError> {
        let x = rotated.reverse_map().at(j);
        Ok(psi.field().interpolate_cubic(x)?)
    };
    let mut out = Vec::with_capacity(nodes.len());
    for &j in nodes {
        let idx = dual.multi_index(j);
        if (0..n).any(|a| idx[a] < 2 || idx[a] + 2 >= dual.shape()[a]) {
            return Err(GeometryError::OutsideImage { node: j });
        }
        // Every node of the 3ᵈ stencil must map back inside the domain of ψ.
        let mut stencil = [0.0; 27];
        for (o, slot) in stencil.iter_mut().enumerate().take(3usize.pow(n as u32)) {
            let mut m = j;
            let mut rem = o;
            for a in 0..n {
                let off = (rem % 3) as isize - 1;
                rem /= 3;
                m = (m as isize + off * dual.stride(a) as isize) as usize;
            }
            if pg.inset(rotated.reverse_map().at(m)) < 0.0 {
                return Err(GeometryError::OutsideImage { node: j });
            }
            *slot = psi_at(m)?;
        }
        let at = |offsets: [isize; MAX_DIM]| {
            let mut o = 0;
            for a in (0..n).rev() {
                o = o * 3 + (offsets[a] + 1) as usize;
            }
            stencil[o]
        };
        let mut d2bar = SymMat::zeros(n);
        for a in 0..n {
            let mut e = [0isize; MAX_DIM];
            let centre = at(e);
            e[a] = 1;
            let plus = at(e);
            e[a] = -1;
            let minus = at(e);
            d2bar.set(a, a, (plus - 2.0 * centre + minus) / (hb * hb));
            for b in a + 1..n {
                let corner = |sa: isize, sb: isize| {
                    let mut e = [0isize; MAX_DIM];
                    e[a] = sa;
                    e[b] = sb;
                    at(e)
                };
                let v = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * hb * hb);
                d2bar.set(a, b, v);
            }
        }

        let hbar = rotated.hessian().at(j);
        let eig = sym_eigen(hbar);
        let frame_ambiguous = eig.values().windows(2).any(|w| (w[1] - w[0]).abs() < 1e-6);
        let x = rotated.reverse_map().at(j);
        let mut grad = [0.0; MAX_DIM];
        for a in 0..n {
            grad[a] = dpsi[a].interpolate_cubic(x)?;
        }
        let d2 = SymMat::from_fn(n, |a, b| d2psi[a * n + b].interpolate_cubic(x).unwrap_or(f64::NAN));
        let mut terms = Vec::with_capacity(n);
        for (i, &lb) in eig.values().iter().enumerate() {
            let e = eig.vector(i);
            let q = |m: usize| rotated.hessian().at(m).quad_form(e);
            let transport: f64 = (0..n)
                .map(|a| {
                    let st = dual.stride(a);
                    grad[a] * (q(j + st) - q(j - st)) / (2.0 * hb)
                })
                .sum::<f64>()
                * -s;
            let factor = c - s * lb;
            terms.push(PhaseHessianTerms {
                lambda_bar: lb,
                transport,
                zeroth: d2.quad_form(e) * factor * factor,
                direct: d2bar.quad_form(e),
            });
        }
        out.push(NodePhaseTerms {
            node: j,
            terms,
            frame_ambiguous,
        });
    }
    Ok(out)
}

/// Mean oscillation `ω` of a matrix field over discrete balls.
#[derive(Debug, Clone, PartialEq)]
pub struct VmoTable {
    pub radii: Vec<f64>,
    /// Sup over ball centres of the mean deviation at exactly this radius.
    pub per_radius: Vec<f64>,
    /// `ω(r) = sup_{ρ ≤ r}` of `per_radius`, over the listed radii.
    pub omega: Vec<f64>,
}

/// Discrete balls are the nodes within Euclidean distance `r` of a centre node,
/// intersected with the grid; every node serves as a centre. The deviation of
/// a node is the Frobenius norm `|M − mean_B M|`. Radii must be at least `2h`.
pub fn vmo_modulus(m: &MatrixField, radii: &[f64]) -> Result<VmoTable, GeometryError> {
    let grid = m.grid();
    let h = grid.spacing();
    let n = grid.dim();
    let min = 2.0 * h;
    if let Some(&r) = radii.iter().find(|&&r| !(r >= min * (1.0 - 1e-12))) {
        return Err(GeometryError::RadiusTooSmall { radius: r, min });
    }
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let mut per_radius = vec![0.0; radii.len()];
    let mut members: Vec<usize> = Vec::new();
    for (slot, &r) in radii.iter().enumerate() {
        let reach = (r / h + 1e-9).floor() as isize;
        let offsets = ball_offsets(n, reach, r / h);
        let mut sup: f64 = 0.0;
        for centre in 0..grid.len() {
            let ci = grid.multi_index(centre);
            members.clear();
            for off in &offsets {
                let mut idx = [0usize; MAX_DIM];
                let mut inside = true;
                for a in 0..n {
                    let i = ci[a] as isize + off[a];
                    if i < 0 || i >= grid.shape()[a] as isize {
                        inside = false;
                        break;
                    }
                    idx[a] = i as usize;
                }
                if inside {
                    members.push(grid.flat(&idx));
                }
            }
            // Shifting by the centre value keeps constant fields exactly at zero.
            let count = members.len() as f64;
            let reference = m.at(centre);
            let mut mean = SymMat::zeros(n);
            for &k in &members {
                mean = mean.add(&m.at(k).sub(reference));
            }
            let mean = mean.scale(1.0 / count);
            let dev: f64 = members
                .iter()
                .map(|&k| m.at(k).sub(reference).sub(&mean).frobenius_norm())
                .sum::<f64>()
                / count;
            sup = sup.max(dev);
        }
        per_radius[slot] = sup;
    }
    let mut omega = vec![0.0; radii.len()];
    let mut running: f64 = 0.0;
    for &slot in &order {
        running = running.max(per_radius[slot]);
        omega[slot] = running;
    }
    Ok(VmoTable {
        radii: radii.to_vec(),
        per_radius,
        omega,
    })
}

fn ball_offsets(n: usize, reach: isize, radius: f64) -> Vec<[isize; MAX_DIM]> {
    let side = (2 * reach + 1) as usize;
    let mut out = Vec::new();
    for code in 0..side.pow(n as u32) {
        let mut off = [0isize; MAX_DIM];
        let mut rem = code;
        for o in off.iter_mut().take(n) {
            *o = (rem % side) as isize - reach;
            rem /= side;
        }
        let d2: isize = off.iter().map(|o| o * o).sum();
        if (d2 as f64) <= radius * radius + 1e-9 {
            out.push(off);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Regularity;

    #[test]
    fn metric_cases() {
        let g = Grid::cube(2, 0.0, 1.0, 3).unwrap();
        let zero = MatrixField::from_fn(&g, |_| SymMat::zeros(2)).unwrap();
        let m = induced_metric(&zero);
        assert_eq!(m.g(4), &SymMat::identity(2));
        assert_eq!(m.sqrt_det(4), 1.0);

        let id = MatrixField::from_fn(&g, |_| SymMat::identity(2)).unwrap();
        let m = induced_metric(&id);
        assert_eq!(m.g(0), &SymMat::scalar(2, 2.0));
        assert!((m.sqrt_det(0).powi(2) - 4.0).abs() < 1e-14);

        let d = MatrixField::from_fn(&g, |_| SymMat::diagonal(&[3.0, 0.5])).unwrap();
        let m = induced_metric(&d);
        assert!(m.g(0).sub(&SymMat::diagonal(&[10.0, 1.25])).frobenius_norm() < 1e-12);
        assert!(m.g_inv(0).sub(&SymMat::diagonal(&[0.1, 0.8])).frobenius_norm() < 1e-12);
    }

    #[test]
    fn identity_metric_gives_flat_laplacian() {
        let g = Grid::cube(2, -1.0, 1.0, 17).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let flat = MatrixField::from_fn(&g, |_| SymMat::zeros(2)).unwrap();
        let lb = laplace_beltrami(&f, &induced_metric(&flat)).unwrap();
        assert!(lb.values().iter().all(|v| (v - 4.0).abs() < 1e-8));
    }

    #[test]
    fn constant_metric_scales_laplacian() {
        let g = Grid::cube(2, -1.0, 1.0, 17).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin() * x[1].exp()).unwrap();
        let id = MatrixField::from_fn(&g, |_| SymMat::identity(2)).unwrap();
        let lb = laplace_beltrami(&f, &induced_metric(&id)).unwrap();
        let flat = flat_laplacian(&f);
        for k in g.interior() {
            assert!((lb.value(k) - 0.5 * flat.value(k)).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_curvature_of_linear_phase_on_paraboloid() {
        let g = Grid::cube(2, -1.0, 1.0, 21).unwrap();
        let u = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let psi = PhaseField::new(ScalarField::from_fn(&g, |x| x[0]).unwrap(), Regularity::C2Alpha);
        let mc = mean_curvature(&u, &psi).unwrap();
        for k in 0..g.len() {
            assert!((mc.norm.value(k) - 0.5f64.sqrt()).abs() < 10.0 * g.spacing());
        }
        let constant = PhaseField::new(ScalarField::constant(&g, 1.2).unwrap(), Regularity::C2Alpha);
        let mc = mean_curvature(&u, &constant).unwrap();
        assert!(mc.vector.values().iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn bm_examples() {
        assert!((bm_value(&[0.5, 1.0], 1).unwrap() - bm_max()).abs() < 1e-15);
        assert!((bm_max() - 0.34657).abs() < 1e-5);
        assert!((bm_value(&[1.0, 1.0], 2).unwrap() - bm_max()).abs() < 1e-15);
        assert!(bm_value(&[1.0], 2).is_err());
    }

    #[test]
    fn convexity_gap_endpoints_and_domain() {
        assert!(bm_convexity_gap(1.0).unwrap().abs() < 1e-15);
        assert!(bm_convexity_gap(0.0).unwrap().abs() < 1e-15);
        assert!(matches!(bm_convexity_gap(1.5), Err(GeometryError::Domain(_))));
        assert!(bm_convexity_gap(-0.1).is_err());
    }

    #[test]
    fn vmo_of_constant_field_is_zero() {
        let g = Grid::cube(2, 0.0, 1.0, 21).unwrap();
        let m = MatrixField::from_fn(&g, |_| SymMat::diagonal(&[1.0, 2.0])).unwrap();
        let t = vmo_modulus(&m, &[0.1, 0.2]).unwrap();
        assert_eq!(t.omega, vec![0.0, 0.0]);
        assert!(matches!(vmo_modulus(&m, &[0.05]), Err(GeometryError::RadiusTooSmall { .. })));
    }
}
