//! Solvers for spectral fractional powers of sparse SPD operators.
//!
//! The crate covers the pipeline `A^alpha u = f` (and the reaction variant
//! `(A^alpha + q I) u = f`) for `alpha` in (0,1):
//!
//! * assembly of finite-difference / lumped-mass model operators with
//!   spectral bounds ([`discretize`]);
//! * construction of rational approximations of `z^{-alpha}` by sinc,
//!   Gauss-Jacobi and substitution quadratures, near-best barycentric
//!   fitting, precomputed best-approximation tables, the extension-problem
//!   eigenexpansion, and diagonal Pade marching ([`rational`],
//!   [`stepping`]);
//! * application of any of these through independent SPD shifted solves
//!   ([`solve`]);
//! * time stepping on top of the fractional solvers ([`stepping`]);
//! * independent spectral oracles and error reports ([`reference`]).
//!
//! Every backend funnels into one partial-fraction representation, so the
//! solvers, reports and file formats are shared across methods.

pub mod compare;
pub mod discretize;
pub mod error;
pub mod io;
pub mod operator;
pub mod rational;
pub mod reference;
pub mod solve;
pub mod spectrum;
pub mod stepping;

pub use error::{Error, Result};
pub use operator::{BoundsProvenance, CsrMatrix, DiscreteOperator};
pub use rational::{BarycentricRational, PartialFractionRational};
pub use solve::{Method, SolveReport, SolverConfig};
