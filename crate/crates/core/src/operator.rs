//! The Lagrangian phase operator `F(H) = Σ arctan λᵢ(H)`, its algebraic
//! equivalents and its linearization.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::fields::{sym_eigen, ScalarField, SymMat};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
}

/// `Σ arctan λᵢ(H)`, in `(−nπ/2, nπ/2)`.
pub fn phase_of(h: &SymMat) -> f64 {
    sym_eigen(h).values().iter().map(|l| l.atan()).sum()
}

/// Elementary symmetric functions `σ₀..σ₃` of the eigenvalues, computed from
/// principal minors (no eigen-decomposition involved).
pub fn elementary_symmetric(h: &SymMat) -> [f64; 4] {
    let n = h.dim();
    let mut sigma = [1.0, 0.0, 0.0, 0.0];
    sigma[1] = h.trace();
    for i in 0..n {
        for j in i + 1..n {
            sigma[2] += h.get(i, i) * h.get(j, j) - h.get(i, j).powi(2);
        }
    }
    if n == 3 {
        sigma[3] = h.det();
    }
    sigma
}

/// `cos c · Σ(−1)ᵏσ₂ₖ₊₁ − sin c · Σ(−1)ᵏσ₂ₖ`.
///
/// These are `cos c · Im − sin c · Re` of `Π(1 + iλₖ)`, so the residual
/// vanishes exactly when the phase of `H` equals `c` modulo `π`.
pub fn sigma_form_residual(h: &SymMat, c: f64) -> f64 {
    let s = elementary_symmetric(h);
    let odd = s[1] - s[3];
    let even = s[0] - s[2];
    c.cos() * odd - c.sin() * even
}

/// `Σ ln λᵢ − c = ln det H − c`.
pub fn ma_dual_residual(h: &SymMat, c: f64) -> Result<f64, OperatorError> {
    let eig = sym_eigen(h);
    if eig.min() <= 0.0 {
        return Err(OperatorError::NotPositiveDefinite {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(eig.values().iter().map(|l| l.ln()).sum::<f64>() - c)
}

/// `DF(H) = Q diag(1/(1+λᵢ²)) Qᵀ`: the derivative of [`phase_of`], so that
/// `d/dt phase_of(H + tE) = tr(DF(H)·E)`.
pub fn linearize(h: &SymMat) -> SymMat {
    OperatorVariant::Arctan.linearize(h)
}

/// Eigenvalue functions the Dirichlet solver can work with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorVariant {
    /// `Σ arctan λᵢ`.
    #[default]
    Arctan,
    /// `Σ f̃(λᵢ)` with `f̃ = arctan` on `λ ≥ 0` and the identity below.
    ModifiedConcave,
    /// `Σ ln λᵢ`, defined for positive definite Hessians only.
    MongeAmpereDual,
}

impl OperatorVariant {
    pub fn eigen_value(self, l: f64) -> Option<f64> {
        match self {
            Self::Arctan => Some(l.atan()),
            Self::ModifiedConcave => Some(if l >= 0.0 { l.atan() } else { l }),
            Self::MongeAmpereDual => (l > 0.0).then(|| l.ln()),
        }
    }

    pub fn eigen_slope(self, l: f64) -> f64 {
        match self {
            Self::Arctan => 1.0 / (1.0 + l * l),
            Self::ModifiedConcave => {
                if l >= 0.0 {
                    1.0 / (1.0 + l * l)
                } else {
                    1.0
                }
            }
            Self::MongeAmpereDual => 1.0 / l,
        }
    }

    /// Operator value at `H`, `None` outside the variant's domain.
    pub fn evaluate(self, h: &SymMat) -> Option<f64> {
        sym_eigen(h).values().iter().map(|&l| self.eigen_value(l)).sum()
    }

    pub fn linearize(self, h: &SymMat) -> SymMat {
        h.map_spectrum(|l| self.eigen_slope(l))
    }

    /// Right-hand side that the quadratic `q|x|²/2` solves exactly, and its inverse.
    pub(crate) fn quadratic_for(self, rhs: f64, dim: usize) -> f64 {
        let per = rhs / dim as f64;
        match self {
            Self::Arctan => per.tan(),
            Self::ModifiedConcave => {
                if per >= 0.0 {
                    per.tan()
                } else {
                    per
                }
            }
            Self::MongeAmpereDual => per.exp(),
        }
    }

    /// Right-hand side of the identity Hessian.
    pub(crate) fn identity_value(self, dim: usize) -> f64 {
        match self {
            Self::Arctan | Self::ModifiedConcave => dim as f64 * FRAC_PI_4,
            Self::MongeAmpereDual => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Arctan => "arctan",
            Self::ModifiedConcave => "modified-concave",
            Self::MongeAmpereDual => "ma-dual",
        }
    }
}

impl std::str::FromStr for OperatorVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arctan" => Ok(Self::Arctan),
            "modified-concave" | "concave" => Ok(Self::ModifiedConcave),
            "ma-dual" | "ma" => Ok(Self::MongeAmpereDual),
            other => Err(format!("unknown operator variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regularity {
    #[default]
    Lipschitz,
    C2Alpha,
}

/// Phase samples `ψ`; the dimension `n` is that of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    field: ScalarField,
    regularity: Regularity,
}

impl PhaseField {
    pub fn new(field: ScalarField, regularity: Regularity) -> Self {
        Self { field, regularity }
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn n(&self) -> usize {
        self.field.grid().dim()
    }

    pub fn is_constant(&self) -> bool {
        let v = self.field.values();
        v.iter().all(|&x| x == v[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

/// Range check and per-node criticality labels of a phase field.
#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub out_of_range: Vec<usize>,
    pub labels: Vec<Criticality>,
    pub threshold: f64,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.out_of_range.is_empty()
    }

    pub fn count(&self, which: Criticality) -> usize {
        self.labels.iter().filter(|&&l| l == which).count()
    }
}

/// Checks `0 ≤ ψ < nπ/2` and labels every node by comparing `|ψ|` to
/// `(n−2)π/2`.
pub fn admissibility(psi: &PhaseField) -> Admissibility {
    let n = psi.n() as f64;
    let upper = n * FRAC_PI_2;
    let threshold = (n - 2.0) * FRAC_PI_2;
    let tol = 1e-12 * upper.max(1.0);
    let mut out_of_range = Vec::new();
    let labels = psi
        .field()
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            if !(0.0..upper).contains(&v) {
                out_of_range.push(k);
            }
            let d = v.abs() - threshold;
            if d.abs() <= tol {
                Criticality::Critical
            } else if d > 0.0 {
                Criticality::Supercritical
            } else {
                Criticality::Subcritical
            }
        })
        .collect();
    Admissibility {
        out_of_range,
        labels,
        threshold,
    }
}
