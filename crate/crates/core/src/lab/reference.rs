//! Trusted limit solutions the ladder errors are measured against.

use crate::classical::panel_pairings;
use crate::error::{CoreError, Result};
use crate::hydro::{hydro_reference_solve, CausticReport};
use crate::panel::TestFunctionPanel;
use crate::potential::TwoBodyPotential;
use crate::profile::{DensityProfile, PhaseProfile};
use crate::stats::gauss_legendre_on;

/// Panel pairings of the limit dynamics at one target time, together with
/// the shift observed when the computation is refined. The shift brackets
/// the quadrature-plus-stepping error of the reference itself, so a caller
/// comparing ladder errors against `pairings` knows how much of what it
/// sees could be reference noise.
#[derive(Debug, Clone)]
pub struct PanelReference {
    /// Per-panel-function pairings from the refined run.
    pub pairings: Vec<f64>,
    /// Max pairing shift between the refined and the coarse run.
    pub self_convergence: f64,
    /// Solver, resolution, and step of the refined run.
    pub provenance: String,
    pub reached_time: f64,
    pub caustic: Option<CausticReport>,
}

/// Evolve the fluid limit to `t_final` twice (markers doubled and step
/// halved the second time) and pair both against the panel.
pub fn hydro_panel_reference(
    density: &DensityProfile,
    phase: &PhaseProfile,
    potential: &TwoBodyPotential,
    panel: &TestFunctionPanel,
    t_final: f64,
    markers: usize,
    dt: f64,
) -> Result<PanelReference> {
    let coarse = hydro_reference_solve(density, phase, potential, markers, t_final, dt)?;
    let fine =
        hydro_reference_solve(density, phase, potential, 2 * markers, t_final, 0.5 * dt)?;
    for run in [&coarse, &fine] {
        if let Some(c) = &run.caustic {
            return Err(CoreError::CausticAbort {
                time: c.time,
                min_jacobian: c.min_jacobian,
                estimated_caustic_time: c.estimated_caustic_time,
            });
        }
    }
    let p_coarse = panel_pairings(&coarse.markers, panel);
    let p_fine = panel_pairings(&fine.markers, panel);
    let self_convergence = p_coarse
        .iter()
        .zip(&p_fine)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(PanelReference {
        pairings: p_fine,
        self_convergence,
        provenance: format!(
            "lagrangian fluid on {} quadrature markers, dt = {:.3e}, t = {:.6}",
            2 * markers,
            fine.dt_used,
            fine.reached_time
        ),
        reached_time: fine.reached_time,
        caustic: None,
    })
}

/// Pairings of the initial concentration: integral of rho(x) F(x, grad
/// sigma(x)) by Gauss-Legendre over the density support. Spectrally exact
/// for the smooth profiles used here, so it serves as the t = 0 reference.
pub fn monokinetic_profile_pairings(
    density: &DensityProfile,
    phase: &PhaseProfile,
    panel: &TestFunctionPanel,
    nodes: usize,
) -> Result<Vec<f64>> {
    if density.dimension() != 1 {
        return Err(CoreError::invalid("density", "profile pairings are one-dimensional"));
    }
    phase.validate_dimension(1)?;
    let lo = density.mean(0) - 8.5 * density.std(0);
    let hi = density.mean(0) + 8.5 * density.std(0);
    let (xs, ws) = gauss_legendre_on(lo, hi, nodes);
    Ok(panel
        .iter()
        .map(|f| {
            xs.iter()
                .zip(&ws)
                .map(|(&x, &w)| w * density.density(&[x]) * f.eval1(x, phase.grad1(x)))
                .sum()
        })
        .collect())
}

/// Fold time of the limit flow: run the reference fluid toward `horizon`
/// and report the extrapolated Jacobian zero crossing.
pub fn measured_caustic_time(
    density: &DensityProfile,
    phase: &PhaseProfile,
    potential: &TwoBodyPotential,
    horizon: f64,
    markers: usize,
    dt: f64,
) -> Result<f64> {
    let run = hydro_reference_solve(density, phase, potential, markers, horizon, dt)?;
    match run.caustic {
        Some(c) => Ok(c.estimated_caustic_time),
        None => Err(CoreError::invalid(
            "horizon",
            format!(
                "no fold up to t = {horizon}; min jacobian stayed at {:.3e}",
                run.min_jacobian
            ),
        )),
    }
}
