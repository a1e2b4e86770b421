//! Convergence laboratory: the experiments that sweep a parameter ladder,
//! measure weak errors against a trusted reference, and fit the decay rate.
//!
//! Four studies are wired up:
//!
//! * [`n_rate`] sweeps the particle count of the classical mean-field system
//!   against a fluid reference,
//! * [`h_rate`] sweeps the dispersion scale of the wave solver and pairs its
//!   phase-space transform against the same fluid reference,
//! * [`kac`] couples the two ladders through h = hbar / N,
//! * [`scaling`] tracks how tangent-flow sensitivity blocks shrink with N.
//!
//! Every experiment returns an [`report::ExperimentReport`]: the full error
//! table (one row per parameter, test function, and time), the fitted
//! log-log slope, and the provenance and self-convergence defect of the
//! reference it trusted. Reports embed their configuration and are
//! bit-reproducible for a fixed configuration hash.

pub mod export;
pub mod fit;
pub mod h_rate;
pub mod kac;
pub mod n_rate;
pub mod reference;
pub mod report;
pub mod scaling;

pub use fit::{fit_slope, SlopeFit};
pub use h_rate::{h_rate_experiment, HRateConfig};
pub use kac::{coupled_kac_experiment, KacConfig};
pub use n_rate::{n_rate_experiment, NRateConfig, SamplingMode};
pub use report::{ErrorSample, ExperimentReport, ReferenceInfo};
pub use scaling::{sensitivity_scaling_experiment, ScalingConfig};
