//! Interacting particle ensembles with mean-field coupling.
//!
//! Every particle feels the weighted average of the pair force over the
//! whole ensemble. With uniform weights 1/N this is the standard 1/N-scaled
//! sum over the other particles; general weights let quadrature loaders fold
//! their panel weights into the same dynamics.

use crate::error::{CoreError, Result};
use crate::panel::{TestFunction, TestFunctionPanel};
use crate::potential::{PotentialKind, TwoBodyPotential};
use crate::profile::{DensityProfile, PhaseProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Positions, velocities, and quadrature weights of N particles in d
/// dimensions. Flat row-major layout: particle i occupies [i*d, (i+1)*d).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    positions: Vec<f64>,
    velocities: Vec<f64>,
    weights: Vec<f64>,
    dimension: usize,
    time: f64,
}

impl EnsembleState {
    pub fn new(
        positions: Vec<f64>,
        velocities: Vec<f64>,
        weights: Vec<f64>,
        dimension: usize,
    ) -> Result<Self> {
        if dimension == 0 || dimension > 3 {
            return Err(CoreError::invalid("dimension", "dimension must lie in 1..=3"));
        }
        let n = weights.len();
        if n == 0 {
            return Err(CoreError::invalid("weights", "ensemble must not be empty"));
        }
        if positions.len() != n * dimension || velocities.len() != n * dimension {
            return Err(CoreError::invalid(
                "positions",
                "position/velocity lengths must equal n_particles * dimension",
            ));
        }
        if positions.iter().chain(&velocities).any(|c| !c.is_finite()) {
            return Err(CoreError::invalid("positions", "coordinates must be finite"));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(CoreError::invalid("weights", "weights must be positive and finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::NotNormalized {
                what: "ensemble weights".into(),
                defect: (total - 1.0).abs(),
                tol: 1e-12,
            });
        }
        Ok(EnsembleState {
            positions,
            velocities,
            weights,
            dimension,
            time: 0.0,
        })
    }

    pub fn uniform(positions: Vec<f64>, velocities: Vec<f64>, dimension: usize) -> Result<Self> {
        if dimension == 0 || positions.len() % dimension != 0 {
            return Err(CoreError::invalid(
                "positions",
                "position length must be a multiple of dimension",
            ));
        }
        let n = positions.len() / dimension;
        if n == 0 {
            return Err(CoreError::invalid("positions", "ensemble must not be empty"));
        }
        Self::new(positions, velocities, vec![1.0 / n as f64; n], dimension)
    }

    pub fn n_particles(&self) -> usize {
        self.weights.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub fn velocities_mut(&mut self) -> &mut [f64] {
        &mut self.velocities
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// Flip all velocities in place; evolving for the same duration again
    /// must return to the start when the stepper is reversible.
    pub fn reverse_velocities(&mut self) {
        for v in &mut self.velocities {
            *v = -*v;
        }
    }
}

/// out = a - b for short coordinate slices.
#[inline]
pub(crate) fn pairwise_displacement(a: &[f64], b: &[f64], out: &mut [f64]) {
    for k in 0..a.len() {
        out[k] = a[k] - b[k];
    }
}

/// Acceleration of every particle: a_i = -sum_{j != i} w_j grad phi(x_i - x_j).
/// With uniform weights this is the 1/N-scaled interaction sum. Rows are
/// computed independently in a fixed summation order, so the result does not
/// depend on the number of worker threads.
pub fn mean_field_force(
    state: &EnsembleState,
    potential: &TwoBodyPotential,
    accel: &mut Vec<f64>,
) -> Result<()> {
    if potential.dimension() != state.dimension() {
        return Err(CoreError::invalid(
            "potential",
            "potential dimension must match ensemble dimension",
        ));
    }
    let n = state.n_particles();
    let d = state.dimension();
    accel.resize(n * d, 0.0);
    if matches!(potential.kind(), PotentialKind::Zero) {
        accel.fill(0.0);
        return Ok(());
    }
    let xs = &state.positions;
    let ws = &state.weights;
    if d == 1 {
        accel
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, out)| {
                let xi = xs[i];
                let mut acc = 0.0;
                for j in 0..n {
                    if j != i {
                        acc -= ws[j] * potential.gradient_1d(xi - xs[j]);
                    }
                }
                *out = acc;
            });
    } else {
        accel
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(i, out)| {
                out.fill(0.0);
                let xi = &xs[i * d..(i + 1) * d];
                let mut dx = [0.0; 3];
                let mut g = [0.0; 3];
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    pairwise_displacement(xi, &xs[j * d..(j + 1) * d], &mut dx[..d]);
                    potential.gradient(&dx[..d], &mut g[..d]);
                    for k in 0..d {
                        out[k] -= ws[j] * g[k];
                    }
                }
            });
    }
    Ok(())
}

/// Extensive total energy
/// N * [ sum_i w_i |v_i|^2 / 2 + (1/2) sum_{i != j} w_i w_j phi(x_i - x_j) ].
/// For uniform weights this is sum |v_i|^2/2 + (1/N) sum_{i<j} phi, and it is
/// exactly conserved by the continuous-time dynamics for any weights.
pub fn total_energy(state: &EnsembleState, potential: &TwoBodyPotential) -> f64 {
    let n = state.n_particles();
    let d = state.dimension();
    let mut kinetic = 0.0;
    for i in 0..n {
        let vi = state.velocity(i);
        kinetic += 0.5 * state.weights[i] * vi.iter().map(|&c| c * c).sum::<f64>();
    }
    let mut interaction = 0.0;
    if !matches!(potential.kind(), PotentialKind::Zero) {
        let mut dx = [0.0; 3];
        for i in 0..n {
            for j in (i + 1)..n {
                pairwise_displacement(state.position(i), state.position(j), &mut dx[..d]);
                interaction += state.weights[i] * state.weights[j] * potential.value(&dx[..d]);
            }
        }
    }
    n as f64 * (kinetic + interaction)
}

/// Weighted mean velocity, conserved because the pair force is antisymmetric.
pub fn mean_momentum(state: &EnsembleState, out: &mut [f64]) {
    out.fill(0.0);
    let d = state.dimension();
    for i in 0..state.n_particles() {
        let vi = state.velocity(i);
        for k in 0..d {
            out[k] += state.weights[i] * vi[k];
        }
    }
}

/// One kick-drift-kick step. `accel` must hold the acceleration at the
/// current positions (use [`mean_field_force`] to prime it); on return it
/// holds the acceleration at the new positions, ready for the next step.
pub fn step_symplectic(
    state: &mut EnsembleState,
    potential: &TwoBodyPotential,
    dt: f64,
    accel: &mut Vec<f64>,
) -> Result<()> {
    if !(dt != 0.0 && dt.is_finite()) {
        return Err(CoreError::invalid("dt", "time step must be nonzero and finite"));
    }
    let m = state.positions.len();
    if accel.len() != m {
        return Err(CoreError::invalid(
            "accel",
            "acceleration buffer must be primed with mean_field_force",
        ));
    }
    let half = 0.5 * dt;
    for k in 0..m {
        state.velocities[k] += half * accel[k];
        state.positions[k] += dt * state.velocities[k];
    }
    mean_field_force(state, potential, accel)?;
    for k in 0..m {
        state.velocities[k] += half * accel[k];
    }
    state.time += dt;
    Ok(())
}

/// Conservation record of a finished particle flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowOutcome {
    pub state: EnsembleState,
    pub steps: usize,
    pub dt_used: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub max_energy_drift: f64,
    pub max_momentum_drift: f64,
}

/// Evolve to `t_final` with the kick-drift-kick scheme. The requested step
/// is rounded so that an integer number of steps lands exactly on `t_final`.
/// Energy and momentum are sampled along the way; non-finite coordinates
/// abort with a divergence error.
pub fn evolve_ensemble(
    state: EnsembleState,
    potential: &TwoBodyPotential,
    t_final: f64,
    dt_request: f64,
) -> Result<FlowOutcome> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(CoreError::invalid("t_final", "final time must be positive and finite"));
    }
    if !(dt_request > 0.0) || !dt_request.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be positive and finite"));
    }
    let hess = potential.bounds().sup_hessian;
    if hess.is_finite() && dt_request * hess.sqrt() > 2.0 {
        return Err(CoreError::StepTooLarge {
            dt: dt_request,
            limit: 2.0 / hess.sqrt(),
            scheme: "kick-drift-kick".into(),
        });
    }
    let steps = (t_final / dt_request).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut state = state;
    let d = state.dimension();
    let mut accel = Vec::new();
    mean_field_force(&state, potential, &mut accel)?;
    let energy_initial = total_energy(&state, potential);
    let mut p0 = vec![0.0; d];
    mean_momentum(&state, &mut p0);
    let mut max_energy_drift: f64 = 0.0;
    let mut max_momentum_drift: f64 = 0.0;
    let stride = (steps / 32).max(1);
    let mut p = vec![0.0; d];
    for s in 0..steps {
        step_symplectic(&mut state, potential, dt, &mut accel)?;
        if s % stride == stride - 1 || s + 1 == steps {
            if state.positions.iter().chain(&state.velocities).any(|c| !c.is_finite()) {
                return Err(CoreError::Diverged {
                    time: state.time,
                    detail: "non-finite particle coordinates".into(),
                });
            }
            max_energy_drift =
                max_energy_drift.max((total_energy(&state, potential) - energy_initial).abs());
            mean_momentum(&state, &mut p);
            let drift = p
                .iter()
                .zip(&p0)
                .map(|(&a, &b)| (a - b).abs())
                .fold(0.0, f64::max);
            max_momentum_drift = max_momentum_drift.max(drift);
        }
    }
    let energy_final = total_energy(&state, potential);
    Ok(FlowOutcome {
        state,
        steps,
        dt_used: dt,
        energy_initial,
        energy_final,
        max_energy_drift,
        max_momentum_drift,
    })
}

/// Classic fourth-order Runge-Kutta on the same vector field. Slower and not
/// symplectic; used as an independent cross-check of the main stepper.
pub fn evolve_ensemble_rk4(
    state: EnsembleState,
    potential: &TwoBodyPotential,
    t_final: f64,
    dt_request: f64,
) -> Result<EnsembleState> {
    if !(t_final > 0.0) || !(dt_request > 0.0) {
        return Err(CoreError::invalid("t_final", "time and step must be positive"));
    }
    let steps = (t_final / dt_request).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut state = state;
    let m = state.positions.len();
    let mut k = vec![vec![0.0; 2 * m]; 4];
    let mut scratch = state.clone();
    let mut accel = Vec::new();
    for _ in 0..steps {
        for stage in 0..4 {
            let (coef, prev) = match stage {
                0 => (0.0, 0),
                1 => (0.5 * dt, 0),
                2 => (0.5 * dt, 1),
                _ => (dt, 2),
            };
            for i in 0..m {
                scratch.positions[i] = state.positions[i] + coef * k[prev][i];
                scratch.velocities[i] = state.velocities[i] + coef * k[prev][m + i];
            }
            mean_field_force(&scratch, potential, &mut accel)?;
            for i in 0..m {
                k[stage][i] = scratch.velocities[i];
                k[stage][m + i] = accel[i];
            }
        }
        for i in 0..2 * m {
            let incr = (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]) / 6.0;
            if i < m {
                state.positions[i] += dt * incr;
            } else {
                state.velocities[i - m] += dt * incr;
            }
        }
        let t = state.time;
        state.set_time(t + dt);
    }
    Ok(state)
}

/// Weighted empirical pairing sum_i w_i F(x_i, v_i).
pub fn empirical_pairing(state: &EnsembleState, f: &TestFunction) -> f64 {
    let n = state.n_particles();
    if state.dimension() == 1 {
        (0..n)
            .map(|i| state.weights[i] * f.eval1(state.positions[i], state.velocities[i]))
            .sum()
    } else {
        (0..n)
            .map(|i| state.weights[i] * f.eval(state.position(i), state.velocity(i)))
            .sum()
    }
}

pub fn panel_pairings(state: &EnsembleState, panel: &TestFunctionPanel) -> Vec<f64> {
    panel.iter().map(|f| empirical_pairing(state, f)).collect()
}

/// How the particle loader turns a density into point masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LoadMode {
    /// Deterministic midpoint-quantile lattice with uniform weights. In d > 1
    /// the particle count must be a perfect d-th power (product lattice).
    QuantileLattice,
    /// Independent draws through the same quantile map.
    MonteCarlo { seed: u64 },
}

/// Build a monokinetic ensemble: positions follow `density`, and each
/// particle's velocity is exactly the phase gradient at its position.
pub fn monokinetic_init(
    n: usize,
    density: &DensityProfile,
    phase: &PhaseProfile,
    mode: LoadMode,
) -> Result<EnsembleState> {
    if n == 0 {
        return Err(CoreError::invalid("n", "particle count must be positive"));
    }
    let d = density.dimension();
    phase.validate_dimension(d)?;
    let mut positions = vec![0.0; n * d];
    match mode {
        LoadMode::QuantileLattice => {
            let per_axis = (n as f64).powf(1.0 / d as f64).round() as usize;
            if per_axis.pow(d as u32) != n {
                return Err(CoreError::invalid(
                    "n",
                    format!("quantile lattice in {d}d needs a perfect {d}-th power, got {n}"),
                ));
            }
            let axis_nodes: Vec<Vec<f64>> = (0..d)
                .map(|a| {
                    (0..per_axis)
                        .map(|i| density.quantile(a, (i as f64 + 0.5) / per_axis as f64))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            for i in 0..n {
                let mut rem = i;
                for a in (0..d).rev() {
                    positions[i * d + a] = axis_nodes[a][rem % per_axis];
                    rem /= per_axis;
                }
            }
        }
        LoadMode::MonteCarlo { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..n {
                for a in 0..d {
                    // open-interval uniform keeps the quantile map finite
                    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                    positions[i * d + a] = density.quantile(a, u)?;
                }
            }
        }
    }
    let mut velocities = vec![0.0; n * d];
    if d == 1 {
        for i in 0..n {
            velocities[i] = phase.grad1(positions[i]);
        }
    } else {
        for i in 0..n {
            let (xs, vs) = (
                &positions[i * d..(i + 1) * d],
                &mut velocities[i * d..(i + 1) * d],
            );
            phase.gradient(xs, vs);
        }
    }
    EnsembleState::uniform(positions, velocities, d)
}
