//! Lagrangian solver for the pressureless fluid system
//! d/dt rho + div(u rho) = 0, d/dt u + (u.grad)u = -grad phi * rho.
//!
//! Fluid markers carry mass, velocity, phase, and the flow-map Jacobian of
//! their own characteristic. The density is never differenced on the grid:
//! rho(x(t), t) * J(t) = rho0(x0) holds along every marker, so the field is
//! reconstructed by transporting initial values and dividing by J. When any
//! marker Jacobian falls to 0.05 the run stops and reports the extrapolated
//! caustic time; past that point the monokinetic description is meaningless
//! and callers are expected to treat the report, not the field, as the
//! result.
//!
//! Grid reconstruction is implemented for dimension 1, where pre-caustic
//! marker order is preserved and piecewise-linear inversion of the flow map
//! is well defined.

use crate::error::{CoreError, Result};
use crate::grid::SpatialGrid;
use crate::kinetic::{
    field_with_parts, DensityField, FieldParts, FieldSource, ForceFieldCache, PhaseSpaceCloud,
};
use crate::potential::{PotentialKind, TwoBodyPotential};
use crate::profile::{DensityProfile, PhaseProfile};
use crate::stats::gauss_legendre_on;
use serde::{Deserialize, Serialize};

/// Where and when the tangent flow started to fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausticReport {
    /// Time at which the run stopped.
    pub time: f64,
    /// Smallest marker Jacobian at that time.
    pub min_jacobian: f64,
    /// Linear extrapolation of the Jacobian zero crossing.
    pub estimated_caustic_time: f64,
}

/// Result of a Lagrangian fluid run.
#[derive(Debug, Clone)]
pub struct HydroRun {
    /// Reconstructed fields at `reached_time` (renormalized; see
    /// `reconstruction_defect`).
    pub field: DensityField,
    /// Markers as a weighted cloud (weights are constant marker masses).
    pub markers: PhaseSpaceCloud,
    /// Initial position of each marker.
    pub origins: Vec<f64>,
    /// Flow-map Jacobian of each marker.
    pub jacobians: Vec<f64>,
    /// Transported phase of each marker (empty when the initial field
    /// carries no phase samples).
    pub sigma: Vec<f64>,
    /// Present when the run stopped at a fold instead of `t_final`.
    pub caustic: Option<CausticReport>,
    pub reached_time: f64,
    pub steps_taken: usize,
    pub dt_used: f64,
    pub min_jacobian: f64,
    /// Mass defect of the grid reconstruction before renormalization.
    pub reconstruction_defect: f64,
}

const JACOBIAN_FLOOR: f64 = 0.05;

/// Transport the fluid fields to `t_final` on the grid of `init`.
///
/// The markers start on the grid nodes with masses rho0 * cell, the field is
/// rebuilt from their deposition each step (with its gradient for the
/// tangent and its value for the phase), and stepping is kick-drift-kick
/// with the closing field reused to open the next step.
pub fn hydro_lagrangian_solve(
    init: &DensityField,
    potential: &TwoBodyPotential,
    t_final: f64,
    dt_request: f64,
) -> Result<HydroRun> {
    let grid = init.grid().clone();
    if grid.dimension() != 1 {
        return Err(CoreError::invalid(
            "grid",
            "fluid grid reconstruction is implemented for dimension 1",
        ));
    }
    if potential.dimension() != 1 {
        return Err(CoreError::invalid("potential", "potential dimension must match grid"));
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(CoreError::invalid("t_final", "final time must be positive and finite"));
    }
    if !(dt_request > 0.0) || !dt_request.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be positive and finite"));
    }
    let steps = (t_final / dt_request).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let cv = grid.cell_volume();
    let xs = grid.coords(0);

    // trim vacuum tails: nodes carrying less than 1e-10 of the peak density
    // are dropped so that near-massless markers cannot run off the grid
    let rho0 = init.rho();
    let rho_max = rho0.iter().cloned().fold(0.0, f64::max);
    let cut = 1e-10 * rho_max;
    let first = rho0.iter().position(|&r| r >= cut).unwrap();
    let last = rho0.iter().rposition(|&r| r >= cut).unwrap();
    let n = last - first + 1;
    if n < 4 {
        return Err(CoreError::invalid("init", "density support covers too few grid nodes"));
    }
    let mut mass: Vec<f64> = rho0[first..=last].iter().map(|&r| r * cv).collect();
    let total: f64 = mass.iter().sum();
    for w in &mut mass {
        *w /= total;
    }
    // initial velocity gradient for the tangent seed, centered differences
    let spacing = grid.axis(0).spacing();
    let u0 = &init.velocity_field()[first..=last];
    let dudx = |i: usize| -> f64 {
        if i == 0 {
            (u0[1] - u0[0]) / spacing
        } else if i == n - 1 {
            (u0[n - 1] - u0[n - 2]) / spacing
        } else {
            (u0[i + 1] - u0[i - 1]) / (2.0 * spacing)
        }
    };
    let origins = xs[first..=last].to_vec();
    let mut markers = MarkersState {
        x: origins.clone(),
        v: u0.to_vec(),
        dx: vec![1.0; n],
        dv: (0..n).map(dudx).collect(),
        sigma: init.sigma().map(|s| s[first..=last].to_vec()),
        mass,
        origin: origins,
    };

    let want_potential = markers.sigma.is_some();
    let parts = FieldParts {
        gradient: true,
        potential: want_potential,
    };
    let solve = |m: &MarkersState| -> Result<ForceFieldCache> {
        let cloud = m.as_cloud()?;
        field_with_parts(FieldSource::Cloud(&cloud), potential, &grid, parts)
    };

    let mut cache = solve(&markers)?;
    let mut time = 0.0;
    let mut caustic = None;
    let mut steps_taken = 0;
    let mut prev_min = markers.min_jacobian();
    for _ in 0..steps {
        markers.half_kick(&cache, dt)?;
        markers.drift(dt);
        cache = solve(&markers)?;
        markers.half_kick(&cache, dt)?;
        time += dt;
        steps_taken += 1;
        let min_j = markers.min_jacobian();
        if min_j <= JACOBIAN_FLOOR {
            let rate = (prev_min - min_j) / dt;
            let estimated = if rate > 0.0 { time + min_j / rate } else { time };
            caustic = Some(CausticReport {
                time,
                min_jacobian: min_j,
                estimated_caustic_time: estimated,
            });
            break;
        }
        prev_min = min_j;
    }

    let min_jacobian = markers.min_jacobian();
    let (field, defect) = markers.reconstruct(&grid, time)?;
    let cloud = markers.as_cloud_at(time)?;
    Ok(HydroRun {
        field,
        markers: cloud,
        origins: markers.origin,
        jacobians: markers.dx,
        sigma: markers.sigma.unwrap_or_default(),
        caustic,
        reached_time: time,
        steps_taken,
        dt_used: dt,
        min_jacobian,
        reconstruction_defect: defect,
    })
}

/// Marker state of the 1-d Lagrangian solver.
struct MarkersState {
    x: Vec<f64>,
    v: Vec<f64>,
    dx: Vec<f64>,
    dv: Vec<f64>,
    sigma: Option<Vec<f64>>,
    mass: Vec<f64>,
    origin: Vec<f64>,
}

impl MarkersState {
    fn min_jacobian(&self) -> f64 {
        self.dx.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn as_cloud(&self) -> Result<PhaseSpaceCloud> {
        PhaseSpaceCloud::new(self.x.clone(), self.v.clone(), self.mass.clone(), 1)
    }

    fn as_cloud_at(&self, time: f64) -> Result<PhaseSpaceCloud> {
        let mut cloud = self.as_cloud()?;
        cloud.set_time(time);
        Ok(cloud)
    }

    /// Half kick of velocities, tangents, and phase from a field cache.
    /// The phase picks up dt/2 * (|v|^2/2 - phi*rho) with the post-kick
    /// velocity, which brackets the drift symmetrically over a full step.
    fn half_kick(&mut self, cache: &ForceFieldCache, dt: f64) -> Result<()> {
        let mut e = [0.0];
        let mut g = [0.0];
        for m in 0..self.x.len() {
            let xm = [self.x[m]];
            cache.force_at(&xm, &mut e)?;
            cache.gradient_at(&xm, &mut g)?;
            self.v[m] += 0.5 * dt * e[0];
            self.dv[m] += 0.5 * dt * g[0] * self.dx[m];
        }
        if let Some(sig) = &mut self.sigma {
            for m in 0..self.x.len() {
                let vpot = cache.potential_at(&[self.x[m]])?;
                sig[m] += 0.5 * dt * (0.5 * self.v[m] * self.v[m] - vpot);
            }
        }
        Ok(())
    }

    fn drift(&mut self, dt: f64) {
        for m in 0..self.x.len() {
            self.x[m] += dt * self.v[m];
            self.dx[m] += dt * self.dv[m];
        }
    }

    /// Piecewise-linear reconstruction of (rho, u, sigma) on the grid from
    /// the ordered markers; returns the field and the pre-renormalization
    /// mass defect.
    fn reconstruct(&self, grid: &SpatialGrid, time: f64) -> Result<(DensityField, f64)> {
        let n = self.x.len();
        for w in self.x.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::Diverged {
                    time,
                    detail: "marker ordering lost before any Jacobian fold".into(),
                });
            }
        }
        let cv = grid.cell_volume();
        // pointwise density at markers from Jacobian transport
        let rho_m: Vec<f64> = (0..n).map(|m| self.mass[m] / cv / self.dx[m]).collect();
        let xs = grid.coords(0);
        let nodes = xs.len();
        let mut rho = vec![0.0; nodes];
        let mut u = vec![0.0; nodes];
        let mut sigma = self.sigma.as_ref().map(|_| vec![0.0; nodes]);
        for (i, &x) in xs.iter().enumerate() {
            if x < self.x[0] || x > self.x[n - 1] {
                // outside the transported support: vacuum with clamped u
                let edge = if x < self.x[0] { 0 } else { n - 1 };
                rho[i] = 0.0;
                u[i] = self.v[edge];
                if let (Some(out), Some(sig)) = (&mut sigma, &self.sigma) {
                    out[i] = sig[edge];
                }
                continue;
            }
            let k = match self.x.binary_search_by(|a| a.partial_cmp(&x).unwrap()) {
                Ok(k) => k.min(n - 2),
                Err(k) => k.saturating_sub(1).min(n - 2),
            };
            let t = (x - self.x[k]) / (self.x[k + 1] - self.x[k]);
            rho[i] = (1.0 - t) * rho_m[k] + t * rho_m[k + 1];
            u[i] = (1.0 - t) * self.v[k] + t * self.v[k + 1];
            if let (Some(out), Some(sig)) = (&mut sigma, &self.sigma) {
                out[i] = (1.0 - t) * sig[k] + t * sig[k + 1];
            }
        }
        let mass: f64 = rho.iter().sum::<f64>() * cv;
        let defect = (mass - 1.0).abs();
        if !(mass > 0.5) {
            return Err(CoreError::Diverged {
                time,
                detail: format!("grid reconstruction lost mass: integral {mass}"),
            });
        }
        for r in &mut rho {
            *r /= mass;
        }
        let field = DensityField::new(grid.clone(), rho, u, sigma, time)?;
        Ok((field, defect))
    }
}

/// Reference-grade variant: markers on a Gauss-Legendre lattice, field and
/// its gradient by direct summation over markers (no grid, no deposition).
/// Accuracy in the marker count is spectral for smooth data, so two runs at
/// different `n_markers` bracket the quadrature error directly.
pub fn hydro_reference_solve(
    density: &DensityProfile,
    phase: &PhaseProfile,
    potential: &TwoBodyPotential,
    n_markers: usize,
    t_final: f64,
    dt_request: f64,
) -> Result<HydroReference> {
    if density.dimension() != 1 || potential.dimension() != 1 {
        return Err(CoreError::invalid(
            "density",
            "reference fluid solver is one-dimensional",
        ));
    }
    phase.validate_dimension(1)?;
    if n_markers < 16 {
        return Err(CoreError::invalid("n_markers", "need at least 16 quadrature markers"));
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(CoreError::invalid("t_final", "final time must be positive and finite"));
    }
    if !(dt_request > 0.0) || !dt_request.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be positive and finite"));
    }
    let steps = (t_final / dt_request).round().max(1.0) as usize;
    let dt = t_final / steps as f64;

    let lo = density.mean(0) - 8.5 * density.std(0);
    let hi = density.mean(0) + 8.5 * density.std(0);
    let (nodes, glw) = gauss_legendre_on(lo, hi, n_markers);
    let mut mass: Vec<f64> = nodes
        .iter()
        .zip(&glw)
        .map(|(&x, &w)| w * density.density(&[x]))
        .collect();
    let total: f64 = mass.iter().sum();
    for w in &mut mass {
        *w /= total;
    }
    let mut x = nodes.clone();
    let mut v: Vec<f64> = nodes.iter().map(|&s| phase.grad1(s)).collect();
    let mut dx = vec![1.0; n_markers];
    let mut dv: Vec<f64> = nodes
        .iter()
        .map(|&s| {
            let mut h = [0.0];
            phase.hessian(&[s], &mut h);
            h[0]
        })
        .collect();
    let mut sigma: Vec<f64> = nodes.iter().map(|&s| phase.sigma1(s)).collect();

    let zero_potential = matches!(potential.kind(), PotentialKind::Zero);
    // direct sums: E(p) = -sum_q m_q phi'(p - q), dE(p) = -sum_q m_q phi''
    let direct = |x: &[f64], e: &mut [f64], g: &mut [f64], vpot: &mut [f64]| {
        if zero_potential {
            e.fill(0.0);
            g.fill(0.0);
            vpot.fill(0.0);
            return;
        }
        for p in 0..x.len() {
            let mut ep = 0.0;
            let mut gp = 0.0;
            let mut vp = 0.0;
            for q in 0..x.len() {
                let dxpq = x[p] - x[q];
                ep -= mass[q] * potential.gradient_1d(dxpq);
                gp -= mass[q] * potential.hessian_1d(dxpq);
                vp += mass[q] * potential.value(&[dxpq]);
            }
            e[p] = ep;
            g[p] = gp;
            vpot[p] = vp;
        }
    };

    let n = n_markers;
    let mut e = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut vp = vec![0.0; n];
    direct(&x, &mut e, &mut g, &mut vp);
    let mut time = 0.0;
    let mut caustic = None;
    let mut prev_min = dx.iter().copied().fold(f64::INFINITY, f64::min);
    let mut steps_taken = 0;
    for _ in 0..steps {
        for m in 0..n {
            v[m] += 0.5 * dt * e[m];
            dv[m] += 0.5 * dt * g[m] * dx[m];
            sigma[m] += 0.5 * dt * (0.5 * v[m] * v[m] - vp[m]);
        }
        for m in 0..n {
            x[m] += dt * v[m];
            dx[m] += dt * dv[m];
        }
        direct(&x, &mut e, &mut g, &mut vp);
        for m in 0..n {
            v[m] += 0.5 * dt * e[m];
            dv[m] += 0.5 * dt * g[m] * dx[m];
            sigma[m] += 0.5 * dt * (0.5 * v[m] * v[m] - vp[m]);
        }
        time += dt;
        steps_taken += 1;
        let min_j = dx.iter().copied().fold(f64::INFINITY, f64::min);
        if min_j <= JACOBIAN_FLOOR {
            let rate = (prev_min - min_j) / dt;
            let estimated = if rate > 0.0 { time + min_j / rate } else { time };
            caustic = Some(CausticReport {
                time,
                min_jacobian: min_j,
                estimated_caustic_time: estimated,
            });
            break;
        }
        prev_min = min_j;
    }

    let mut markers = PhaseSpaceCloud::new(x, v, mass, 1)?;
    markers.set_time(time);
    let min_jacobian = dx.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(HydroReference {
        markers,
        origins: nodes,
        jacobians: dx,
        sigma,
        caustic,
        reached_time: time,
        steps_taken,
        dt_used: dt,
        min_jacobian,
    })
}

/// Result of the quadrature-marker reference run. Weak pairings evaluate
/// directly on the markers (they are a Gauss-Legendre discretization of the
/// transported measure), so no grid field is produced.
#[derive(Debug, Clone)]
pub struct HydroReference {
    pub markers: PhaseSpaceCloud,
    pub origins: Vec<f64>,
    pub jacobians: Vec<f64>,
    pub sigma: Vec<f64>,
    pub caustic: Option<CausticReport>,
    pub reached_time: f64,
    pub steps_taken: usize,
    pub dt_used: f64,
    pub min_jacobian: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{empirical_pairing, monokinetic_init, panel_pairings, LoadMode};
    use crate::kinetic::evolve_vlasov;
    use crate::panel::default_test_panel;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> SpatialGrid {
        SpatialGrid::centered(1, 16.0, n, false).unwrap()
    }

    #[test]
    fn still_fluid_stays_frozen() {
        let g = grid(256);
        let density = DensityProfile::standard(1).unwrap();
        let init = DensityField::from_profiles(&g, &density, &PhaseProfile::Zero).unwrap();
        let phi = TwoBodyPotential::zero(1).unwrap();
        let run = hydro_lagrangian_solve(&init, &phi, 1.0, 0.05).unwrap();
        assert!(run.caustic.is_none());
        assert_abs_diff_eq!(run.reached_time, 1.0);
        // vacuum trimming zeroes nodes carrying < 1e-10 of the peak density
        for i in 0..256 {
            assert_abs_diff_eq!(run.field.rho()[i], init.rho()[i], epsilon = 1e-9);
            assert_abs_diff_eq!(run.field.velocity_field()[i], 0.0, epsilon = 1e-14);
        }
        assert!(run.jacobians.iter().all(|&j| (j - 1.0).abs() < 1e-14));
        assert!(run.reconstruction_defect < 1e-9);
    }

    #[test]
    fn linear_contraction_folds_near_unit_time() {
        // sigma0 = -x^2/2 and no force: markers follow x0 (1 - t), the
        // Jacobian is 1 - t, and the fold extrapolates to t = 1
        let g = grid(256);
        let density = DensityProfile::standard(1).unwrap();
        let init =
            DensityField::from_profiles(&g, &density, &PhaseProfile::Quadratic { coeff: -1.0 })
                .unwrap();
        let phi = TwoBodyPotential::zero(1).unwrap();
        let run = hydro_lagrangian_solve(&init, &phi, 2.0, 0.01).unwrap();
        let report = run.caustic.expect("fold must be detected");
        assert!(report.min_jacobian <= 0.05 + 1e-12);
        assert!(run.reached_time < 1.0);
        assert_abs_diff_eq!(report.estimated_caustic_time, 1.0, epsilon = 1e-9);
        // characteristics are exact for this data
        let t = run.reached_time;
        for (m, &x0) in run.origins.iter().enumerate().step_by(37) {
            assert_abs_diff_eq!(run.markers.positions()[m], x0 * (1.0 - t), epsilon = 1e-10);
            assert_abs_diff_eq!(run.jacobians[m], 1.0 - t, epsilon = 1e-10);
        }
    }

    #[test]
    fn plane_wave_phase_transports_exactly() {
        // sigma0 = w x with no force: x = x0 + w t and the transported
        // phase is w x - w^2 t / 2; choosing w t a multiple of the spacing
        // puts markers back on nodes, so reconstruction is exact
        let g = grid(512);
        let density = DensityProfile::standard(1).unwrap();
        let w = 0.5;
        let init = DensityField::from_profiles(
            &g,
            &density,
            &PhaseProfile::Linear { slope: vec![w] },
        )
        .unwrap();
        let phi = TwoBodyPotential::zero(1).unwrap();
        let t = 1.0;
        let run = hydro_lagrangian_solve(&init, &phi, t, 0.05).unwrap();
        assert!(run.caustic.is_none());
        let xs = g.coords(0);
        for (i, &x) in xs.iter().enumerate().step_by(29) {
            if x.abs() <= 6.0 {
                assert_abs_diff_eq!(
                    run.field.sigma().unwrap()[i],
                    w * x - 0.5 * w * w * t,
                    epsilon = 1e-10
                );
                assert_abs_diff_eq!(run.field.velocity_field()[i], w, epsilon = 1e-12);
                assert_abs_diff_eq!(
                    run.field.rho()[i],
                    density.density(&[x - w * t]),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn fluid_and_phase_space_transport_agree_weakly() {
        let g = grid(512);
        let density = DensityProfile::standard(1).unwrap();
        let phase = PhaseProfile::Zero;
        let phi = TwoBodyPotential::gaussian(1.0, 1.0, 1).unwrap();
        let init = DensityField::from_profiles(&g, &density, &phase).unwrap();
        let t = 0.4;
        let run = hydro_lagrangian_solve(&init, &phi, t, 0.005).unwrap();
        assert!(run.caustic.is_none());

        let cloud = monokinetic_init(4096, &density, &phase, LoadMode::QuantileLattice).unwrap();
        let vlasov = evolve_vlasov(cloud, &phi, &g, t, 0.005).unwrap();
        let panel = default_test_panel(1).unwrap();
        let from_cloud = panel_pairings(&vlasov.cloud, &panel);
        for (f, &cv) in panel.iter().zip(&from_cloud) {
            let fm = empirical_pairing(&run.markers, f);
            assert!(
                (fm - cv).abs() < 1e-3,
                "{}: fluid {fm} vs transport {cv}",
                f.id()
            );
        }
    }

    #[test]
    fn reference_markers_match_grid_solver_and_self_converge() {
        let density = DensityProfile::standard(1).unwrap();
        let phase = PhaseProfile::Sine {
            amplitude: 0.2,
            wavenumber: 1.0,
            axis: 0,
        };
        let phi = TwoBodyPotential::gaussian(1.0, 1.0, 1).unwrap();
        let t = 0.3;
        let coarse = hydro_reference_solve(&density, &phase, &phi, 128, t, 0.01).unwrap();
        let fine = hydro_reference_solve(&density, &phase, &phi, 192, t, 0.01).unwrap();
        assert!(coarse.caustic.is_none());
        let panel = default_test_panel(1).unwrap();
        for f in panel.iter() {
            let pc = empirical_pairing(&coarse.markers, f);
            let pf = empirical_pairing(&fine.markers, f);
            assert!(
                (pc - pf).abs() < 1e-10,
                "{}: quadrature not converged, {pc} vs {pf}",
                f.id()
            );
        }

        // grid path on the same data stays within its deposition error
        let g = grid(512);
        let init = DensityField::from_profiles(&g, &density, &phase).unwrap();
        let run = hydro_lagrangian_solve(&init, &phi, t, 0.01).unwrap();
        for f in panel.iter() {
            let pg = empirical_pairing(&run.markers, f);
            let pf = empirical_pairing(&fine.markers, f);
            assert!(
                (pg - pf).abs() < 1e-3,
                "{}: grid {pg} vs reference {pf}",
                f.id()
            );
        }
    }

    #[test]
    fn reference_solver_reports_the_same_fold() {
        let density = DensityProfile::standard(1).unwrap();
        let phase = PhaseProfile::Quadratic { coeff: -1.0 };
        let phi = TwoBodyPotential::zero(1).unwrap();
        let run = hydro_reference_solve(&density, &phase, &phi, 64, 2.0, 0.01).unwrap();
        let report = run.caustic.expect("fold must be detected");
        assert_abs_diff_eq!(report.estimated_caustic_time, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        let density = DensityProfile::standard(1).unwrap();
        let phi1 = TwoBodyPotential::zero(1).unwrap();
        let g = grid(64);
        let init = DensityField::from_profiles(&g, &density, &PhaseProfile::Zero).unwrap();
        assert!(hydro_lagrangian_solve(&init, &phi1, 0.0, 0.01).is_err());
        assert!(hydro_lagrangian_solve(&init, &phi1, 1.0, -0.1).is_err());
        let phi2 = TwoBodyPotential::zero(2).unwrap();
        assert!(hydro_lagrangian_solve(&init, &phi2, 1.0, 0.1).is_err());
        assert!(hydro_reference_solve(&density, &PhaseProfile::Zero, &phi1, 8, 1.0, 0.1).is_err());
    }
}
