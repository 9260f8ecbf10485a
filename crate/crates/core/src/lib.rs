//! Solver library for the linear dispersive equation
//! `u_t + g(x) u_x + u_xxx = 0` on a truncated domain with discrete
//! transparent boundary conditions.
//!
//! Time stepping is a first-order Lie-Trotter splitting (explicit Euler for
//! the advection flow, implicit Euler for the dispersive flow); space is
//! discretized by a dual-Petrov-Galerkin Legendre pseudo-spectral method on
//! a generalized Gauss-Jacobi rule, so each step reduces to one banded
//! solve. The non-local boundary conditions are discrete convolutions whose
//! kernels come from a numerical inverse Z-transform of the characteristic
//! roots of the scheme.
//!
//! Module map:
//! - [`orthopoly`]: Legendre/Jacobi evaluation and the quadrature rule
//! - [`tbc`]: characteristic roots, kernels, boundary history sums
//! - [`petrov_galerkin`]: boundary-adapted bases and the banded step system
//! - [`solver`]: problem scaling and the full time-stepping loop
//! - [`reference`]: independent exact solutions and error norms
//! - [`linalg`]: small dense/banded LU solvers

pub mod linalg;
pub mod orthopoly;
pub mod petrov_galerkin;
pub mod reference;
pub mod solver;
pub mod tbc;

pub use orthopoly::{build_rule, SpectralRule};
pub use petrov_galerkin::PetrovGalerkinBasis;
pub use solver::{run, Coefficient, ProblemSpec, RunReport};
pub use tbc::{build_kernels, TbcKernels};
