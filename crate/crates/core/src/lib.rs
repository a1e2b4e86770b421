//! Numerical laboratory for mean-field particle systems, their kinetic and
//! fluid limits, and the matching semiclassical wave dynamics.
//!
//! The crate provides four solver families that share initial data and
//! observables, so their outputs can be compared in the weak topology:
//!
//! * interacting particle ensembles with symplectic time stepping and
//!   tangent-space sensitivity analysis,
//! * phase-space transport on grids (particle-in-cell) and its monokinetic
//!   fluid reduction with caustic detection,
//! * a nonlinear one-particle wave equation with a self-consistent mean
//!   field, split-step spectral integration, and an amplitude-phase solver
//!   that tracks the same dynamics without resolving fast oscillations,
//! * phase-space transforms of wave fields and mixed families, evaluated
//!   against a fixed panel of smooth test observables.
//!
//! The `lab` module drives the convergence studies that tie the families
//! together and fits the measured error scalings.

pub mod classical;
pub mod error;
pub mod fft;
pub mod grid;
pub mod hydro;
pub mod kinetic;
pub mod lab;
pub mod linalg;
pub mod panel;
pub mod potential;
pub mod profile;
pub mod quantum;
pub mod sensitivity;
pub mod stats;

pub use error::{CoreError, Result};
