//! Numerical toolkit for the Lagrangian phase operator `Σ arctan λᵢ(D²u)` and
//! the downward rotation of convex potentials through the Legendre transform.
//!
//! Modules, bottom-up:
//!
//! - [`fields`]: uniform grids, sampled fields, stencils, small symmetric eigen-solvers.
//! - [`convex`]: discrete Legendre transform, subdifferentials, convexity certificates.
//! - [`rotation`]: rotation of convex potentials, reverse map, transformation laws.
//! - [`operator`]: phase operator, its σ-polynomial and log-determinant forms, linearization.
//! - [`geometry`]: induced metric, mean curvature, Laplace–Beltrami, b̄ₘ, VMO modulus.
//! - [`solver`]: damped Newton for the Dirichlet problem.
//! - [`io`]: GridField JSON files.

pub mod fields;
pub mod convex;
pub mod operator;
pub mod rotation;
pub mod geometry;
pub mod solver;
pub mod io;
