//! Coupled ladder: the interaction range fixes one physical constant and
//! ties the dispersion scale to the particle count, h = hbar / N, so both
//! limits are taken along a single path.

use crate::classical::{evolve_ensemble, monokinetic_init, panel_pairings, LoadMode};
use crate::error::{CoreError, Result};
use crate::lab::fit::fit_slope;
use crate::lab::h_rate::oscillation_grid;
use crate::lab::reference::hydro_panel_reference;
use crate::lab::report::{ErrorSample, ExperimentReport, ReferenceInfo};
use crate::panel::default_test_panel;
use crate::potential::TwoBodyPotential;
use crate::profile::{AmplitudeProfile, DensityProfile, PhaseProfile};
use crate::quantum::hartree::evolve_hartree;
use crate::quantum::wave::wkb_initialize;
use crate::quantum::wigner::wigner_weak_pairings;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KacConfig {
    /// Physical action constant; each rung uses h = hbar / N.
    pub hbar: f64,
    /// Particle counts, strictly increasing, at least four.
    pub ladder: Vec<usize>,
    pub density: DensityProfile,
    /// Amplitude modulation; see the dispersion-ladder notes on why a
    /// nonzero modulation is needed to see the generic first-order rate.
    pub modulation: PhaseProfile,
    pub phase: PhaseProfile,
    pub potential: TwoBodyPotential,
    pub box_half: f64,
    pub t_final: f64,
    pub dt_particles: f64,
    /// Wave step at the coarsest rung, refined like sqrt(h) down the ladder.
    pub dt_wave: f64,
    pub max_points: usize,
    pub reference_markers: usize,
    pub reference_dt: f64,
}

/// Sweep the coupled ladder. Each rung measures the particle system and
/// the wave system against the same fluid reference; the combined error is
/// the larger of the two. The report carries the per-rung envelope
/// constants combined / (h + 1/N), whose stability certifies the joint
/// first-order bound.
pub fn coupled_kac_experiment(cfg: &KacConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    if cfg.ladder.len() < 4 {
        return Err(CoreError::invalid("ladder", "need at least four ladder points"));
    }
    if cfg.ladder.windows(2).any(|w| w[0] >= w[1]) || cfg.ladder[0] == 0 {
        return Err(CoreError::invalid("ladder", "ladder must be positive and increasing"));
    }
    if !(cfg.hbar > 0.0) || !cfg.hbar.is_finite() {
        return Err(CoreError::invalid("hbar", "the action constant must be positive"));
    }
    let panel = default_test_panel(1)?;
    let amplitude = AmplitudeProfile::new(cfg.density.clone(), cfg.modulation.clone())?;
    let reference = hydro_panel_reference(
        &cfg.density,
        &cfg.phase,
        &cfg.potential,
        &panel,
        cfg.t_final,
        cfg.reference_markers,
        cfg.reference_dt,
    )?;
    let mut report = ExperimentReport::shell("coupled_kac", cfg);
    report.ladder = cfg.ladder.iter().map(|&n| n as f64).collect();

    let h0 = cfg.hbar / cfg.ladder[0] as f64;
    for &n in &cfg.ladder {
        let h = cfg.hbar / n as f64;

        let init = monokinetic_init(n, &cfg.density, &cfg.phase, LoadMode::QuantileLattice)?;
        let run = evolve_ensemble(init, &cfg.potential, cfg.t_final, cfg.dt_particles)?;
        let particle_pairings = panel_pairings(&run.state, &panel);

        let grid =
            oscillation_grid(cfg.box_half, &cfg.phase, &cfg.modulation, h, cfg.max_points)?;
        let psi0 = wkb_initialize(&amplitude, &cfg.phase, h, &grid)?;
        let dt = cfg.dt_wave * (h / h0).sqrt();
        let hartree = evolve_hartree(&psi0, &cfg.potential, cfg.t_final, dt)?;
        let wave_summary = wigner_weak_pairings(&hartree.psi, &panel)?;

        let mut worst_particles = 0.0_f64;
        let mut worst_wave = 0.0_f64;
        for (k, f) in panel.iter().enumerate() {
            let want = reference.pairings[k];
            let ep = (particle_pairings[k] - want).abs();
            let ew = (wave_summary.pairings[k] - want).abs();
            worst_particles = worst_particles.max(ep);
            worst_wave = worst_wave.max(ew);
            report.samples.push(ErrorSample {
                parameter: n as f64,
                test_function: format!("{}[particles]", f.id()),
                time: cfg.t_final,
                error: ep,
            });
            report.samples.push(ErrorSample {
                parameter: n as f64,
                test_function: format!("{}[wave]", f.id()),
                time: cfg.t_final,
                error: ew,
            });
        }
        let combined = worst_particles.max(worst_wave);
        report.ladder_errors.push((n as f64, combined));
        report
            .extras
            .push((format!("envelope_constant[N={n}]"), combined / (h + 1.0 / n as f64)));
    }

    let floor = reference.self_convergence.max(1e-13);
    let pts: Vec<(f64, f64)> =
        report.ladder_errors.iter().map(|&(p, e)| (p, e.max(floor))).collect();
    report.fit = Some(fit_slope(&pts)?);

    let constants: Vec<f64> = report
        .extras
        .iter()
        .filter(|(k, _)| k.starts_with("envelope_constant"))
        .map(|&(_, v)| v)
        .collect();
    let c_max = constants.iter().cloned().fold(0.0, f64::max);
    let c_min = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    report.extras.push(("envelope_ratio".into(), c_max / c_min));
    let monotone = report.ladder_errors.windows(2).all(|w| w[1].1 <= w[0].1);
    report.extras.push(("monotone".into(), if monotone { 1.0 } else { 0.0 }));
    if !monotone {
        report.notes.push("combined error is not monotone along the ladder".into());
    }
    report.regime = format!("coupled, hbar = {}", cfg.hbar);
    report.reference = ReferenceInfo::gated(
        reference.provenance.clone(),
        reference.self_convergence,
        report.smallest_error().max(floor),
    );
    report.valid = report.reference.trusted && monotone;
    report.wall_clock = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn light_coupled_ladder_holds_the_joint_bound() {
        let cfg = KacConfig {
            hbar: 1.0,
            ladder: vec![16, 32, 64, 128],
            density: DensityProfile::standard(1).unwrap(),
            modulation: PhaseProfile::Sine { amplitude: 0.4, wavenumber: 1.0, axis: 0 },
            phase: PhaseProfile::Sine { amplitude: 0.2, wavenumber: 1.0, axis: 0 },
            potential: TwoBodyPotential::gaussian(0.4, 1.5, 1).unwrap(),
            // unit-wavenumber sines wrap on multiples of 2 pi
            box_half: 3.0 * std::f64::consts::PI,
            t_final: 0.3,
            dt_particles: 0.01,
            dt_wave: 2e-3,
            max_points: 1 << 13,
            reference_markers: 1024,
            reference_dt: 5e-3,
        };
        let report = coupled_kac_experiment(&cfg).unwrap();
        assert!(report.valid, "gate failed: {:?} notes {:?}", report.reference, report.notes);
        let ratio = report
            .extras
            .iter()
            .find(|(k, _)| k == "envelope_ratio")
            .map(|&(_, v)| v)
            .unwrap();
        assert!(
            ratio < 3.0,
            "envelope constant swings by {ratio} across the ladder"
        );
        let fit = report.fit.unwrap();
        assert!(
            (-1.5..=-0.6).contains(&fit.slope),
            "combined error slope {} far from the joint rate",
            fit.slope
        );
        // both legs recorded for every rung and function
        assert_eq!(report.samples.len(), 4 * 9 * 2);
    }

    #[test]
    fn degenerate_configurations_are_rejected() {
        let mut cfg = KacConfig {
            hbar: 1.0,
            ladder: vec![16, 32, 64],
            density: DensityProfile::standard(1).unwrap(),
            modulation: PhaseProfile::Zero,
            phase: PhaseProfile::Zero,
            potential: TwoBodyPotential::zero(1).unwrap(),
            box_half: 8.0,
            t_final: 0.3,
            dt_particles: 0.01,
            dt_wave: 2e-3,
            max_points: 1 << 13,
            reference_markers: 256,
            reference_dt: 5e-3,
        };
        assert!(coupled_kac_experiment(&cfg).is_err());
        cfg.ladder = vec![16, 32, 64, 128];
        cfg.hbar = 0.0;
        assert!(coupled_kac_experiment(&cfg).is_err());
    }
}
