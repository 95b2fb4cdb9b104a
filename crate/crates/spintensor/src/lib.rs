//! Exact spin-tensor calculus on composite bundles.
//!
//! The crate implements an exact symbolic engine for spin-tensor fields over
//! a space-time chart: scalars are multivariate polynomials with
//! Gaussian-rational coefficients, component arrays carry one scalar per
//! multi-index, and the differentiation operators (native multivariate,
//! degenerate, spatial covariant) act on them with no rounding anywhere.
//! Torsion, dynamic curvature and the three curvature component families are
//! derived from an extended connection, and a verification harness checks
//! the full catalogue of commutation identities as exact polynomial
//! equalities on seeded random instances.

pub mod algebra;
pub mod bundle;
pub mod curvature;
pub mod diffops;
pub mod fixture;
pub mod gen;
pub mod mutation;
pub mod report;
pub mod spingroup;
pub mod suite;
