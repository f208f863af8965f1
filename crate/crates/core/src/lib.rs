//! Numerical laboratory for two-dimensional Laplacian and elliptic growth.
//!
//! A bounded planar domain grows when fluid is injected at an interior
//! point `w`: the boundary moves with normal velocity `v_n = λ ∂ₙg`, where
//! `g` is the Green function of the driving operator (`Δ`, `Δ − u`, or
//! `∇λ∇`) with `L g = Q δ_w` and `g = 0` on the boundary.  This crate
//! provides the pieces needed to simulate and cross-check that process on
//! a uniform grid:
//!
//! - [`grid`] — level-set domains, scalar fields, measures, quadrature;
//! - [`green`] — direct Green-function and Dirichlet solvers for the three
//!   operator families, with singularity splitting;
//! - [`perturb`] — first-order and series variation formulas for Green
//!   functions under operator and domain perturbation;
//! - [`dirichlet`] — perturbative Dirichlet solvers and disk closed forms;
//! - [`balayage`] — partial balayage as a projected-SOR obstacle problem;
//! - [`growth`] — strong (level-set) and weak (balayage) growth steppers
//!   with Richardson-moment diagnostics;
//! - [`inverse`] — forward maps for the boundary-response and
//!   Dirichlet-to-Neumann inverse problems;
//! - [`accept`] — the acceptance checklist run by the CLI and test suite.
//!
//! All operations are deterministic and single-threaded; every public type
//! is immutable once constructed, so values may be shared freely across
//! threads.

pub mod accept;
pub mod balayage;
pub mod dirichlet;
pub mod error;
pub mod green;
pub mod grid;
pub mod growth;
pub mod inverse;
pub mod perturb;
pub mod special;

pub use error::{Error, Result};
pub use grid::{
    boundary_integrate, harmonic_moment, integrate, make_disk, make_ellipse, BoundaryNode,
    BoundaryProfile, GridDomain, GridSpec, Measure, Point, ScalarField,
};
