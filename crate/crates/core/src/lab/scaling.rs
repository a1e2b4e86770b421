//! Sensitivity-scaling ladder: how strongly particle j at time zero moves
//! particle i at time t, as the crowd around them grows.

use crate::classical::{evolve_ensemble, monokinetic_init, LoadMode};
use crate::error::{CoreError, Result};
use crate::lab::fit::fit_slope;
use crate::lab::report::{ErrorSample, ExperimentReport, ReferenceInfo};
use crate::potential::TwoBodyPotential;
use crate::profile::{DensityProfile, PhaseProfile};
use crate::sensitivity::{sensitivity_blocks, SensitivityBlocks};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingConfig {
    /// Particle counts, strictly increasing, at least four.
    pub ladder: Vec<usize>,
    pub density: DensityProfile,
    pub phase: PhaseProfile,
    pub potential: TwoBodyPotential,
    pub t_final: f64,
    pub dt: f64,
    /// Central-difference displacement for the oracle check.
    pub fd_epsilon: f64,
}

fn probes_for(n: usize) -> Vec<usize> {
    let mut probe = vec![0, n / 3, (2 * n) / 3];
    probe.dedup();
    probe
}

/// Largest tangent entry over blocks with i != probe, and the largest and
/// smallest over the probe's own blocks.
fn block_extremes(blocks: &SensitivityBlocks, n: usize) -> (f64, f64, f64) {
    let mut off = 0.0_f64;
    let mut diag_max = 0.0_f64;
    let mut diag_min = f64::INFINITY;
    for (p, &j) in blocks.probe.iter().enumerate() {
        for i in 0..n {
            let (pos, mom) = blocks.block_abs_max(i, p);
            let magnitude = pos.max(mom);
            if i == j {
                diag_max = diag_max.max(magnitude);
                diag_min = diag_min.min(magnitude);
            } else {
                off = off.max(magnitude);
            }
        }
    }
    (off, diag_max, diag_min)
}

/// Central-difference check of the tangent blocks through the public
/// stepper: displace the probe particle (its velocity follows the phase
/// gradient, as the tangent seeding does), evolve both sides, and compare
/// every response entry. Returns the gap relative to the largest tangent
/// magnitude.
fn finite_difference_gap(
    cfg: &ScalingConfig,
    n: usize,
    blocks: &SensitivityBlocks,
    probe_index: usize,
) -> Result<f64> {
    let j = blocks.probe[probe_index];
    let eps = cfg.fd_epsilon;
    let run = |shift: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut state =
            monokinetic_init(n, &cfg.density, &cfg.phase, LoadMode::QuantileLattice)?;
        state.positions_mut()[j] += shift;
        let x = state.positions()[j];
        state.velocities_mut()[j] = cfg.phase.grad1(x);
        let out = evolve_ensemble(state, &cfg.potential, cfg.t_final, cfg.dt)?;
        Ok((out.state.positions().to_vec(), out.state.velocities().to_vec()))
    };
    let (xp, vp) = run(eps)?;
    let (xm, vm) = run(-eps)?;
    let mut scale = 0.0_f64;
    let mut gap = 0.0_f64;
    for i in 0..n {
        let tan_x = blocks.position_entry(i, 0, probe_index, 0);
        let tan_v = blocks.momentum_entry(i, 0, probe_index, 0);
        let fd_x = (xp[i] - xm[i]) / (2.0 * eps);
        let fd_v = (vp[i] - vm[i]) / (2.0 * eps);
        scale = scale.max(tan_x.abs()).max(tan_v.abs());
        gap = gap.max((tan_x - fd_x).abs()).max((tan_v - fd_v).abs());
    }
    if scale == 0.0 {
        return Ok(gap);
    }
    Ok(gap / scale)
}

/// Sweep the particle ladder, recording the off-diagonal decay and the
/// diagonal boundedness of the tangent blocks, with a finite-difference
/// oracle at the smallest rung.
pub fn sensitivity_scaling_experiment(cfg: &ScalingConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    if cfg.ladder.len() < 4 {
        return Err(CoreError::invalid("ladder", "need at least four ladder points"));
    }
    if cfg.ladder.windows(2).any(|w| w[0] >= w[1]) || cfg.ladder[0] < 4 {
        return Err(CoreError::invalid(
            "ladder",
            "ladder must be increasing with at least four particles",
        ));
    }
    if !(cfg.fd_epsilon > 0.0) || !cfg.fd_epsilon.is_finite() {
        return Err(CoreError::invalid("fd_epsilon", "displacement must be positive"));
    }
    let mut report = ExperimentReport::shell("sensitivity_scaling", cfg);
    report.ladder = cfg.ladder.iter().map(|&n| n as f64).collect();

    let mut diag_max_all = 0.0_f64;
    let mut diag_min_all = f64::INFINITY;
    let mut fd_gap = None;
    for (rung, &n) in cfg.ladder.iter().enumerate() {
        let init = monokinetic_init(n, &cfg.density, &cfg.phase, LoadMode::QuantileLattice)?;
        let probe = probes_for(n);
        let blocks = sensitivity_blocks(
            &init,
            &cfg.potential,
            &cfg.phase,
            cfg.t_final,
            cfg.dt,
            &probe,
        )?;
        let (off, diag_max, diag_min) = block_extremes(&blocks, n);
        diag_max_all = diag_max_all.max(diag_max);
        diag_min_all = diag_min_all.min(diag_min);
        report.samples.push(ErrorSample {
            parameter: n as f64,
            test_function: "off_diagonal_max".into(),
            time: cfg.t_final,
            error: off,
        });
        report.samples.push(ErrorSample {
            parameter: n as f64,
            test_function: "diagonal_max".into(),
            time: cfg.t_final,
            error: diag_max,
        });
        report.ladder_errors.push((n as f64, off));
        report.extras.push((format!("diagonal_max[N={n}]"), diag_max));
        report.extras.push((format!("diagonal_min[N={n}]"), diag_min));
        if rung == 0 {
            // oracle at the cheapest rung, mid probe
            let gap = finite_difference_gap(cfg, n, &blocks, probe.len() / 2)?;
            report.extras.push(("fd_relative_gap".into(), gap));
            fd_gap = Some(gap);
        }
    }

    let floor = 1e-14;
    if report.ladder_errors.iter().all(|&(_, e)| e <= floor) {
        report
            .notes
            .push("all couplings at the roundoff floor; slope fit skipped".into());
    } else {
        let pts: Vec<(f64, f64)> =
            report.ladder_errors.iter().map(|&(p, e)| (p, e.max(floor))).collect();
        report.fit = Some(fit_slope(&pts)?);
    }
    report
        .notes
        .push("sample values are tangent-block magnitudes, not reference gaps".into());
    let diag_ratio = diag_max_all / diag_min_all;
    report.extras.push(("diagonal_ratio".into(), diag_ratio));
    report.regime = "tangent-linear".into();
    // the trust anchor here is the oracle, not a solver reference
    let gap = fd_gap.unwrap_or(f64::INFINITY);
    report.reference = ReferenceInfo {
        provenance: format!(
            "central differences through the symplectic stepper, eps = {:.1e}, N = {}",
            cfg.fd_epsilon, cfg.ladder[0]
        ),
        self_convergence: gap,
        budget: 1e-4,
        trusted: gap <= 1e-4,
    };
    report.valid = report.reference.trusted;
    report.wall_clock = start.elapsed().as_secs_f64();
    Ok(report)
}
