//! One-particle wave mechanics with a self-consistent mean field.
//!
//! All solvers here are one-dimensional and periodic: the studies this crate
//! runs place a rapidly decaying packet well inside a box large enough that
//! the periodic images never matter, and every initializer enforces that.
//! Oscillatory initial data a(x) exp(i sigma(x)/h) must be resolved by the
//! grid; constructors reject spacing the phase cannot live on.

pub mod grenier;
pub mod hartree;
pub mod mixed;
pub mod wave;
pub mod wigner;
