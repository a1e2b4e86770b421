//! Tangent-space analysis of the particle flow.
//!
//! The variational equations are integrated alongside the flow itself, with
//! the same kick-drift-kick splitting, so every derivative reported here is
//! the exact derivative of the discrete map (finite differences of the flow
//! reproduce it to quadrature precision, which the tests exploit).
//!
//! Initial data is monokinetic: perturbing particle j's position also tilts
//! its velocity through the phase Hessian, so tangent columns are seeded as
//! (dx_j, dv_j) = (e, grad^2 sigma(x_j) e).

use crate::classical::{mean_field_force, pairwise_displacement, EnsembleState};
use crate::error::{CoreError, Result};
use crate::linalg::{determinant, determinant_small};
use crate::potential::{PotentialKind, TwoBodyPotential};
use crate::profile::PhaseProfile;
use serde::{Deserialize, Serialize};

/// Dense pair Hessians H_ij = grad^2 phi(x_i - x_j) for i != j, mirrored
/// across the diagonal (phi is even, so H is too).
struct PairHessians {
    h: Vec<f64>,
    n: usize,
    d: usize,
}

impl PairHessians {
    fn new(n: usize, d: usize) -> Self {
        PairHessians {
            h: vec![0.0; n * n * d * d],
            n,
            d,
        }
    }

    fn fill(&mut self, state: &EnsembleState, potential: &TwoBodyPotential) {
        let (n, d) = (self.n, self.d);
        if matches!(potential.kind(), PotentialKind::Zero) {
            self.h.fill(0.0);
            return;
        }
        let dd = d * d;
        let mut dx = [0.0; 3];
        let mut block = [0.0; 9];
        for i in 0..n {
            for j in (i + 1)..n {
                pairwise_displacement(state.position(i), state.position(j), &mut dx[..d]);
                potential.hessian(&dx[..d], &mut block[..dd]);
                self.h[(i * n + j) * dd..(i * n + j + 1) * dd].copy_from_slice(&block[..dd]);
                self.h[(j * n + i) * dd..(j * n + i + 1) * dd].copy_from_slice(&block[..dd]);
            }
        }
    }

    /// out_i = -sum_{j != i} w_j H_ij (in_i - in_j), one tangent column.
    fn apply(&self, weights: &[f64], input: &[f64], out: &mut [f64]) {
        let (n, d) = (self.n, self.d);
        if d == 1 {
            for i in 0..n {
                let mut acc = 0.0;
                let xi = input[i];
                for j in 0..n {
                    if j != i {
                        acc -= weights[j] * self.h[i * n + j] * (xi - input[j]);
                    }
                }
                out[i] = acc;
            }
            return;
        }
        let dd = d * d;
        for i in 0..n {
            let oi = &mut out[i * d..(i + 1) * d];
            oi.fill(0.0);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let hij = &self.h[(i * n + j) * dd..(i * n + j + 1) * dd];
                for a in 0..d {
                    let mut acc = 0.0;
                    for b in 0..d {
                        acc += hij[a * d + b] * (input[i * d + b] - input[j * d + b]);
                    }
                    oi[a] -= weights[j] * acc;
                }
            }
        }
    }
}

/// Columns of the flow derivative, propagated together with the state.
struct TangentFlow {
    dx: Vec<f64>,
    dv: Vec<f64>,
    n_cols: usize,
    nd: usize,
}

impl TangentFlow {
    fn new(n_cols: usize, nd: usize) -> Self {
        TangentFlow {
            dx: vec![0.0; n_cols * nd],
            dv: vec![0.0; n_cols * nd],
            n_cols,
            nd,
        }
    }

    fn col_x(&self, c: usize) -> &[f64] {
        &self.dx[c * self.nd..(c + 1) * self.nd]
    }

    fn col_v(&self, c: usize) -> &[f64] {
        &self.dv[c * self.nd..(c + 1) * self.nd]
    }
}

/// Advance state and tangent columns by `steps` kick-drift-kick steps of
/// size dt. One fresh pair-Hessian evaluation per step; the closing-kick
/// Hessian of one step is reused as the opening-kick Hessian of the next.
fn propagate(
    state: &mut EnsembleState,
    potential: &TwoBodyPotential,
    dt: f64,
    steps: usize,
    tangent: &mut TangentFlow,
    hess: &mut PairHessians,
    hess_is_fresh: bool,
) -> Result<()> {
    let nd = tangent.nd;
    let mut accel = Vec::new();
    mean_field_force(state, potential, &mut accel)?;
    if !hess_is_fresh {
        hess.fill(state, potential);
    }
    let half = 0.5 * dt;
    let mut jac = vec![0.0; nd];
    for _ in 0..steps {
        for c in 0..tangent.n_cols {
            let base = c * nd;
            hess.apply(state.weights(), &tangent.dx[base..base + nd], &mut jac);
            for k in 0..nd {
                tangent.dv[base + k] += half * jac[k];
                tangent.dx[base + k] += dt * tangent.dv[base + k];
            }
        }
        for k in 0..nd {
            state.velocities_mut()[k] += half * accel[k];
        }
        for k in 0..nd {
            let v = state.velocities()[k];
            state.positions_mut()[k] += dt * v;
        }
        mean_field_force(state, potential, &mut accel)?;
        hess.fill(state, potential);
        for c in 0..tangent.n_cols {
            let base = c * nd;
            hess.apply(state.weights(), &tangent.dx[base..base + nd], &mut jac);
            for k in 0..nd {
                tangent.dv[base + k] += half * jac[k];
            }
        }
        for k in 0..nd {
            state.velocities_mut()[k] += half * accel[k];
        }
        let t = state.time();
        state.set_time(t + dt);
        if state.positions().iter().any(|c| !c.is_finite()) {
            return Err(CoreError::Diverged {
                time: state.time(),
                detail: "non-finite coordinates in tangent flow".into(),
            });
        }
    }
    Ok(())
}

fn steps_for(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(CoreError::invalid("t", "time must be nonnegative and finite"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be positive and finite"));
    }
    if t == 0.0 {
        return Ok((0, dt));
    }
    let steps = (t / dt).round().max(1.0) as usize;
    Ok((steps, t / steps as f64))
}

/// Derivatives of the time-t phase point with respect to initial positions
/// of the probed particles, under the monokinetic constraint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityBlocks {
    n_particles: usize,
    dimension: usize,
    pub time: f64,
    pub dt_used: f64,
    pub steps: usize,
    pub probe: Vec<usize>,
    /// entry [(c * n + i) * d + a]: d(x_i^a) / d(x_probe[p]^b), c = p*d + b
    position: Vec<f64>,
    momentum: Vec<f64>,
}

impl SensitivityBlocks {
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// d x_i^alpha(t) / d x_{probe[p]}^beta(0)
    pub fn position_entry(&self, i: usize, alpha: usize, p: usize, beta: usize) -> f64 {
        let c = p * self.dimension + beta;
        self.position[(c * self.n_particles + i) * self.dimension + alpha]
    }

    /// d v_i^alpha(t) / d x_{probe[p]}^beta(0)
    pub fn momentum_entry(&self, i: usize, alpha: usize, p: usize, beta: usize) -> f64 {
        let c = p * self.dimension + beta;
        self.momentum[(c * self.n_particles + i) * self.dimension + alpha]
    }

    /// Largest absolute entry of the (i, p) block, position and momentum.
    pub fn block_abs_max(&self, i: usize, p: usize) -> (f64, f64) {
        let d = self.dimension;
        let mut mx = 0.0f64;
        let mut mv = 0.0f64;
        for beta in 0..d {
            for alpha in 0..d {
                mx = mx.max(self.position_entry(i, alpha, p, beta).abs());
                mv = mv.max(self.momentum_entry(i, alpha, p, beta).abs());
            }
        }
        (mx, mv)
    }
}

fn check_probe(probe: &[usize], n: usize) -> Result<()> {
    if probe.is_empty() {
        return Err(CoreError::invalid("probe", "probe set must not be empty"));
    }
    if probe.iter().any(|&j| j >= n) {
        return Err(CoreError::invalid("probe", "probe index out of range"));
    }
    let mut sorted = probe.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != probe.len() {
        return Err(CoreError::invalid("probe", "probe indices must be distinct"));
    }
    Ok(())
}

fn seed_monokinetic(
    state: &EnsembleState,
    sigma: &PhaseProfile,
    probe: &[usize],
) -> TangentFlow {
    let d = state.dimension();
    let nd = state.n_particles() * d;
    let mut tangent = TangentFlow::new(probe.len() * d, nd);
    let mut hess = [0.0; 9];
    for (p, &j) in probe.iter().enumerate() {
        sigma.hessian(state.position(j), &mut hess[..d * d]);
        for beta in 0..d {
            let c = p * d + beta;
            tangent.dx[c * nd + j * d + beta] = 1.0;
            for alpha in 0..d {
                tangent.dv[c * nd + j * d + alpha] = hess[alpha * d + beta];
            }
        }
    }
    tangent
}

fn validate_setup(
    state: &EnsembleState,
    potential: &TwoBodyPotential,
    sigma: &PhaseProfile,
) -> Result<()> {
    if potential.dimension() != state.dimension() {
        return Err(CoreError::invalid(
            "potential",
            "potential dimension must match ensemble dimension",
        ));
    }
    sigma.validate_dimension(state.dimension())
}

fn collect_blocks(
    state: &EnsembleState,
    tangent: &TangentFlow,
    probe: &[usize],
    dt_used: f64,
    steps: usize,
) -> SensitivityBlocks {
    SensitivityBlocks {
        n_particles: state.n_particles(),
        dimension: state.dimension(),
        time: state.time(),
        dt_used,
        steps,
        probe: probe.to_vec(),
        position: tangent.dx.clone(),
        momentum: tangent.dv.clone(),
    }
}

/// Tangent-linear derivative blocks d(x_i(t), v_i(t)) / d x_j(0) for j in
/// `probe`, with the velocity response v_j(0) = grad sigma(x_j(0)) folded in.
pub fn sensitivity_blocks(
    state0: &EnsembleState,
    potential: &TwoBodyPotential,
    sigma: &PhaseProfile,
    t: f64,
    dt: f64,
    probe: &[usize],
) -> Result<SensitivityBlocks> {
    validate_setup(state0, potential, sigma)?;
    check_probe(probe, state0.n_particles())?;
    let (steps, dt_used) = steps_for(t, dt)?;
    let mut state = state0.clone();
    let mut tangent = seed_monokinetic(&state, sigma, probe);
    let mut hess = PairHessians::new(state.n_particles(), state.dimension());
    propagate(&mut state, potential, dt_used, steps, &mut tangent, &mut hess, false)?;
    Ok(collect_blocks(&state, &tangent, probe, dt_used, steps))
}

/// Derivative of the momentum map taken at time t of a flow restarted from
/// the time-(t-s) configuration: the tangent of the restart leg composes
/// with the tangent of the momentum leg. For s = t the restart leg is the
/// identity and the result is the momentum half of [`sensitivity_blocks`].
pub fn pullback_momentum_sensitivity(
    state0: &EnsembleState,
    potential: &TwoBodyPotential,
    sigma: &PhaseProfile,
    t: f64,
    s: f64,
    dt: f64,
    probe: &[usize],
) -> Result<SensitivityBlocks> {
    if !(0.0 <= s && s <= t) {
        return Err(CoreError::invalid("s", "need 0 <= s <= t"));
    }
    validate_setup(state0, potential, sigma)?;
    check_probe(probe, state0.n_particles())?;
    let (restart_steps, restart_dt) = steps_for(t - s, dt)?;
    let (main_steps, main_dt) = steps_for(t, dt)?;
    let mut state = state0.clone();
    let mut tangent = seed_monokinetic(&state, sigma, probe);
    let mut hess = PairHessians::new(state.n_particles(), state.dimension());
    if restart_steps > 0 {
        propagate(
            &mut state,
            potential,
            restart_dt,
            restart_steps,
            &mut tangent,
            &mut hess,
            false,
        )?;
    }
    // second leg continues the same tangent columns from the restarted
    // configuration; the Hessian cache is only valid if a first leg ran
    let fresh = restart_steps > 0;
    propagate(
        &mut state,
        potential,
        main_dt,
        main_steps,
        &mut tangent,
        &mut hess,
        fresh,
    )?;
    Ok(collect_blocks(&state, &tangent, probe, main_dt, restart_steps + main_steps))
}

/// Determinant summary of the flow derivative at time t.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobianBounds {
    /// smallest per-particle det of d x_i(t) / d x_i(0) (monokinetic seeding)
    pub min_diagonal_det: f64,
    pub max_diagonal_det: f64,
    /// determinant of the full phase-space derivative (free seeding);
    /// symplectic stepping keeps it at 1 up to roundoff
    pub phase_space_det: f64,
    pub caustic_detected: bool,
    /// first time at which some diagonal-block determinant dropped to 0.05
    pub caustic_time: Option<f64>,
    pub time: f64,
}

/// Per-particle position-map determinants plus the Liouville check. The
/// phase-space tangent carries 2 N d columns, so the particle count is
/// capped; the convergence studies only need this at small N.
pub fn flow_jacobian_bounds(
    state0: &EnsembleState,
    potential: &TwoBodyPotential,
    sigma: &PhaseProfile,
    t: f64,
    dt: f64,
) -> Result<JacobianBounds> {
    validate_setup(state0, potential, sigma)?;
    let n = state0.n_particles();
    let d = state0.dimension();
    let nd = n * d;
    if nd > 128 {
        return Err(CoreError::invalid(
            "state0",
            "jacobian bounds need n_particles * dimension <= 128",
        ));
    }
    let (steps, dt_used) = steps_for(t, dt)?;
    let mut state = state0.clone();

    // columns 0..nd: monokinetic position seeds (diagonal-block monitor);
    // columns nd..3nd: free phase-space seeds (Liouville determinant)
    let probe: Vec<usize> = (0..n).collect();
    let mono = seed_monokinetic(&state, sigma, &probe);
    let mut tangent = TangentFlow::new(3 * nd, nd);
    tangent.dx[..nd * nd].copy_from_slice(&mono.dx);
    tangent.dv[..nd * nd].copy_from_slice(&mono.dv);
    for k in 0..nd {
        tangent.dx[(nd + k) * nd + k] = 1.0; // d/dx seeds
        tangent.dv[(2 * nd + k) * nd + k] = 1.0; // d/dv seeds
    }

    let mut hess = PairHessians::new(n, d);
    let mut caustic_time = None;
    let mut block = [0.0; 9];
    let mut fresh = false;
    for step in 0..steps {
        propagate(&mut state, potential, dt_used, 1, &mut tangent, &mut hess, fresh)?;
        fresh = true;
        if caustic_time.is_none() {
            let mut min_det = f64::INFINITY;
            for i in 0..n {
                diag_block(&tangent, i, d, &mut block);
                min_det = min_det.min(determinant_small(&block[..d * d], d));
            }
            if min_det <= 0.05 {
                caustic_time = Some(dt_used * (step + 1) as f64);
            }
        }
    }

    let mut min_diag = f64::INFINITY;
    let mut max_diag = f64::NEG_INFINITY;
    for i in 0..n {
        diag_block(&tangent, i, d, &mut block);
        let det = determinant_small(&block[..d * d], d);
        min_diag = min_diag.min(det);
        max_diag = max_diag.max(det);
    }

    // assemble the 2nd x 2nd phase-space matrix: rows = final (x, v)
    // coordinates, columns = free seeds
    let m = 2 * nd;
    let mut full = vec![0.0; m * m];
    for c in 0..m {
        let col = nd + c;
        let cx = tangent.col_x(col);
        let cv = tangent.col_v(col);
        for r in 0..nd {
            full[r * m + c] = cx[r];
            full[(nd + r) * m + c] = cv[r];
        }
    }
    let phase_space_det = determinant(full, m);

    Ok(JacobianBounds {
        min_diagonal_det: min_diag,
        max_diagonal_det: max_diag,
        phase_space_det,
        caustic_detected: caustic_time.is_some(),
        caustic_time,
        time: state.time(),
    })
}

fn diag_block(tangent: &TangentFlow, i: usize, d: usize, out: &mut [f64; 9]) {
    for beta in 0..d {
        let cx = tangent.col_x(i * d + beta);
        for alpha in 0..d {
            out[alpha * d + beta] = cx[i * d + alpha];
        }
    }
}
