//! Phase-space transport with a self-consistent convolved field.
//!
//! The distribution is carried by weighted markers; the force field is built
//! by cloud-in-cell deposition onto a spatial grid followed by an exact
//! (zero-padded) FFT convolution with the smooth kernel -grad phi, then
//! interpolated back to marker positions. Deposition and gather use the same
//! linear assignment, so a marker exerts no force on itself and the total
//! momentum transfer cancels pairwise.

use crate::classical::EnsembleState;
use crate::error::{CoreError, Result};
use crate::fft::{fft_nd, C64};
use crate::grid::SpatialGrid;
use crate::panel::{TestFunction, TestFunctionPanel};
use crate::potential::{PotentialKind, TwoBodyPotential};
use crate::profile::{DensityProfile, PhaseProfile};
use serde::{Deserialize, Serialize};

/// Weighted markers sampling a phase-space measure. Structurally identical
/// to a particle ensemble; the distinction is semantic (markers sample a
/// continuum distribution, their count is a numerical knob, not a physical
/// parameter).
pub type PhaseSpaceCloud = EnsembleState;

/// Fluid fields (rho, u, optionally sigma) sampled on grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    grid: SpatialGrid,
    rho: Vec<f64>,
    u: Vec<f64>,
    sigma: Option<Vec<f64>>,
    time: f64,
}

impl DensityField {
    pub fn new(
        grid: SpatialGrid,
        rho: Vec<f64>,
        u: Vec<f64>,
        sigma: Option<Vec<f64>>,
        time: f64,
    ) -> Result<Self> {
        let nodes = grid.total_points();
        let d = grid.dimension();
        if rho.len() != nodes || u.len() != nodes * d {
            return Err(CoreError::invalid(
                "rho",
                "field arrays must match the grid node count",
            ));
        }
        if let Some(s) = &sigma {
            if s.len() != nodes {
                return Err(CoreError::invalid("sigma", "sigma samples must match the grid"));
            }
        }
        if rho.iter().any(|&r| r < -1e-12 || !r.is_finite()) {
            return Err(CoreError::invalid("rho", "density must be nonnegative and finite"));
        }
        let mass: f64 = rho.iter().sum::<f64>() * grid.cell_volume();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(CoreError::NotNormalized {
                what: "density field".into(),
                defect: (mass - 1.0).abs(),
                tol: 1e-8,
            });
        }
        Ok(DensityField {
            grid,
            rho,
            u,
            sigma,
            time,
        })
    }

    /// Sample smooth profiles on the grid nodes.
    pub fn from_profiles(
        grid: &SpatialGrid,
        density: &DensityProfile,
        phase: &PhaseProfile,
    ) -> Result<Self> {
        let d = grid.dimension();
        if density.dimension() != d {
            return Err(CoreError::invalid("density", "profile dimension must match grid"));
        }
        phase.validate_dimension(d)?;
        let nodes = grid.total_points();
        let mut rho = vec![0.0; nodes];
        let mut u = vec![0.0; nodes * d];
        let mut sigma = vec![0.0; nodes];
        let mut x = vec![0.0; d];
        for i in 0..nodes {
            grid.node_position(i, &mut x);
            rho[i] = density.density(&x);
            sigma[i] = phase.sigma(&x);
            phase.gradient(&x, &mut u[i * d..(i + 1) * d]);
        }
        DensityField::new(grid.clone(), rho, u, Some(sigma), 0.0)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn velocity_field(&self) -> &[f64] {
        &self.u
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

/// Weak pairing of the velocity-graph measure rho(x) delta(v - u(x)) with a
/// test function, by grid quadrature.
pub fn monokinetic_pairing(field: &DensityField, f: &TestFunction) -> f64 {
    let d = field.grid.dimension();
    let cv = field.grid.cell_volume();
    let nodes = field.grid.total_points();
    if d == 1 {
        let mut x = [0.0];
        let mut acc = 0.0;
        for i in 0..nodes {
            field.grid.node_position(i, &mut x);
            acc += field.rho[i] * f.eval1(x[0], field.u[i]);
        }
        return acc * cv;
    }
    let mut x = vec![0.0; d];
    let mut acc = 0.0;
    for i in 0..nodes {
        field.grid.node_position(i, &mut x);
        acc += field.rho[i] * f.eval(&x, &field.u[i * d..(i + 1) * d]);
    }
    acc * cv
}

pub fn monokinetic_panel_pairings(field: &DensityField, panel: &TestFunctionPanel) -> Vec<f64> {
    panel.iter().map(|f| monokinetic_pairing(field, f)).collect()
}

/// Per-marker linear (cloud-in-cell) assignment: base node and fraction on
/// each axis. Markers must sit at least one cell inside the grid boundary.
struct CicAnchor {
    base: [usize; 3],
    frac: [f64; 3],
}

fn cic_anchor(grid: &SpatialGrid, x: &[f64], marker: usize, time: f64) -> Result<CicAnchor> {
    let d = grid.dimension();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..d {
        let axis = grid.axis(a);
        let s = (x[a] - axis.min) / axis.spacing();
        if !(s >= 0.0) || s >= (axis.points - 1) as f64 {
            return Err(CoreError::MarkerLeftDomain {
                index: marker,
                time,
            });
        }
        let b = s.floor() as usize;
        base[a] = b;
        frac[a] = s - b as f64;
    }
    Ok(CicAnchor { base, frac })
}

/// Deposit marker weights onto grid nodes; returns a mass density
/// (sum rho * cell_volume equals the total marker weight exactly).
/// Serial accumulation in marker order keeps the result deterministic.
pub fn cic_deposit(cloud: &PhaseSpaceCloud, grid: &SpatialGrid) -> Result<Vec<f64>> {
    let d = grid.dimension();
    if cloud.dimension() != d {
        return Err(CoreError::invalid("cloud", "cloud dimension must match grid"));
    }
    let mut rho = vec![0.0; grid.total_points()];
    let inv_cv = 1.0 / grid.cell_volume();
    let corners = 1usize << d;
    let mut idx = [0usize; 3];
    for m in 0..cloud.n_particles() {
        let anchor = cic_anchor(grid, cloud.position(m), m, cloud.time())?;
        let w = cloud.weights()[m] * inv_cv;
        for corner in 0..corners {
            let mut weight = w;
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    idx[a] = anchor.base[a] + 1;
                    weight *= anchor.frac[a];
                } else {
                    idx[a] = anchor.base[a];
                    weight *= 1.0 - anchor.frac[a];
                }
            }
            rho[grid.flat_index(&idx[..d])] += weight;
        }
    }
    Ok(rho)
}

/// Gather a node-sampled vector field at a marker position with the same
/// linear assignment used by deposition.
fn cic_gather(
    grid: &SpatialGrid,
    values: &[f64],
    components: usize,
    x: &[f64],
    marker: usize,
    time: f64,
    out: &mut [f64],
) -> Result<()> {
    let d = grid.dimension();
    let anchor = cic_anchor(grid, x, marker, time)?;
    out[..components].fill(0.0);
    let corners = 1usize << d;
    let mut idx = [0usize; 3];
    for corner in 0..corners {
        let mut weight = 1.0;
        for a in 0..d {
            if corner >> a & 1 == 1 {
                idx[a] = anchor.base[a] + 1;
                weight *= anchor.frac[a];
            } else {
                idx[a] = anchor.base[a];
                weight *= 1.0 - anchor.frac[a];
            }
        }
        let node = grid.flat_index(&idx[..d]);
        for c in 0..components {
            out[c] += weight * values[node * components + c];
        }
    }
    Ok(())
}

/// What the field solver reads its density from.
pub enum FieldSource<'a> {
    Cloud(&'a PhaseSpaceCloud),
    Density(&'a DensityField),
}

/// Which node-sampled convolutions a field cache should carry beyond the
/// force itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct FieldParts {
    pub gradient: bool,
    pub potential: bool,
}

/// E = -grad phi * rho sampled on grid nodes, with optional grad E and
/// optional potential values phi * rho.
#[derive(Debug, Clone)]
pub struct ForceFieldCache {
    grid: SpatialGrid,
    e: Vec<f64>,
    grad: Option<Vec<f64>>,
    vpot: Option<Vec<f64>>,
}

impl ForceFieldCache {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn field(&self) -> &[f64] {
        &self.e
    }

    pub fn field_at_node(&self, node: usize) -> &[f64] {
        let d = self.grid.dimension();
        &self.e[node * d..(node + 1) * d]
    }

    /// Interpolated force at an arbitrary point.
    pub fn force_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        cic_gather(&self.grid, &self.e, self.grid.dimension(), x, usize::MAX, f64::NAN, out)
            .map_err(|_| CoreError::invalid("x", "force query outside the grid"))
    }

    /// Interpolated force gradient (row-major d x d), if it was built.
    pub fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let grad = self.grad.as_ref().ok_or_else(|| {
            CoreError::invalid("gradient", "field cache built without gradients")
        })?;
        let d = self.grid.dimension();
        cic_gather(&self.grid, grad, d * d, x, usize::MAX, f64::NAN, out)
            .map_err(|_| CoreError::invalid("x", "gradient query outside the grid"))
    }

    /// Interpolated convolved potential phi * rho, if it was built.
    pub fn potential_at(&self, x: &[f64]) -> Result<f64> {
        let vpot = self.vpot.as_ref().ok_or_else(|| {
            CoreError::invalid("potential", "field cache built without potential values")
        })?;
        let mut out = [0.0];
        cic_gather(&self.grid, vpot, 1, x, usize::MAX, f64::NAN, &mut out)
            .map_err(|_| CoreError::invalid("x", "potential query outside the grid"))?;
        Ok(out[0])
    }
}

/// Exact linear convolution of a node-sampled mass distribution with kernel
/// components sampled on the offset lattice, via zero padding to twice the
/// grid along every axis.
fn convolve_with_kernel(
    grid: &SpatialGrid,
    cell_mass: &[f64],
    kernels: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let d = grid.dimension();
    let shape: Vec<usize> = (0..d).map(|a| grid.axis(a).points).collect();
    let padded: Vec<usize> = shape.iter().map(|&n| 2 * n).collect();
    let total_padded: usize = padded.iter().product();

    // padded density transform, computed once
    let mut rho_hat = vec![C64::new(0.0, 0.0); total_padded];
    scatter_into_padded(&shape, &padded, cell_mass, &mut rho_hat);
    fft_nd(&mut rho_hat, &padded, false);

    let mut results = Vec::with_capacity(kernels.len());
    let mut work = vec![C64::new(0.0, 0.0); total_padded];
    for kernel in kernels {
        for (w, &k) in work.iter_mut().zip(kernel) {
            *w = C64::new(k, 0.0);
        }
        fft_nd(&mut work, &padded, false);
        for (w, r) in work.iter_mut().zip(&rho_hat) {
            *w *= r;
        }
        fft_nd(&mut work, &padded, true);
        results.push(extract_from_padded(&shape, &padded, &work));
    }
    results
}

fn scatter_into_padded(shape: &[usize], padded: &[usize], src: &[f64], dst: &mut [C64]) {
    let d = shape.len();
    let mut idx = vec![0usize; d];
    for (flat, &v) in src.iter().enumerate() {
        let mut rem = flat;
        for a in (0..d).rev() {
            idx[a] = rem % shape[a];
            rem /= shape[a];
        }
        let mut p = 0;
        for a in 0..d {
            p = p * padded[a] + idx[a];
        }
        dst[p] = C64::new(v, 0.0);
    }
}

fn extract_from_padded(shape: &[usize], padded: &[usize], src: &[C64]) -> Vec<f64> {
    let d = shape.len();
    let total: usize = shape.iter().product();
    let mut out = vec![0.0; total];
    let mut idx = vec![0usize; d];
    for (flat, o) in out.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..d).rev() {
            idx[a] = rem % shape[a];
            rem /= shape[a];
        }
        let mut p = 0;
        for a in 0..d {
            p = p * padded[a] + idx[a];
        }
        *o = src[p].re;
    }
    out
}

/// Offset coordinate for padded index m on an axis of n points: indices
/// 0..n map to offsets 0..n-1 cells, indices n..2n map to -n..-1 cells.
fn padded_offset(m: usize, n: usize, spacing: f64) -> f64 {
    if m < n {
        m as f64 * spacing
    } else {
        (m as f64 - 2.0 * n as f64) * spacing
    }
}

fn sample_kernel(
    grid: &SpatialGrid,
    padded: &[usize],
    mut component: impl FnMut(&[f64]) -> f64,
) -> Vec<f64> {
    let d = grid.dimension();
    let total: usize = padded.iter().product();
    let mut out = vec![0.0; total];
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for (flat, o) in out.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..d).rev() {
            idx[a] = rem % padded[a];
            rem /= padded[a];
        }
        for a in 0..d {
            x[a] = padded_offset(idx[a], grid.axis(a).points, grid.axis(a).spacing());
        }
        *o = component(&x);
    }
    out
}

/// Build the self-consistent field E = -grad phi * rho on the grid.
/// `with_gradient` additionally convolves with the kernel Hessian so grad E
/// can be interpolated (the fluid tangent transport needs it).
pub fn self_consistent_field(
    source: FieldSource<'_>,
    potential: &TwoBodyPotential,
    grid: &SpatialGrid,
    with_gradient: bool,
) -> Result<ForceFieldCache> {
    field_with_parts(
        source,
        potential,
        grid,
        FieldParts {
            gradient: with_gradient,
            potential: false,
        },
    )
}

/// Field solve with an explicit choice of cached parts.
pub fn field_with_parts(
    source: FieldSource<'_>,
    potential: &TwoBodyPotential,
    grid: &SpatialGrid,
    parts: FieldParts,
) -> Result<ForceFieldCache> {
    let d = grid.dimension();
    if potential.dimension() != d {
        return Err(CoreError::invalid("potential", "potential dimension must match grid"));
    }
    let width = potential.range().ok_or_else(|| CoreError::GridRejected {
        reason: "field convolution needs a kernel of finite width".into(),
    })?;
    let nodes = grid.total_points();
    let cell_mass: Vec<f64> = match source {
        FieldSource::Cloud(cloud) => {
            let rho = cic_deposit(cloud, grid)?;
            let cv = grid.cell_volume();
            rho.into_iter().map(|r| r * cv).collect()
        }
        FieldSource::Density(field) => {
            if field.grid != *grid {
                return Err(CoreError::invalid("grid", "density field lives on a different grid"));
            }
            let cv = grid.cell_volume();
            field.rho.iter().map(|&r| r * cv).collect()
        }
    };

    if matches!(potential.kind(), PotentialKind::Zero) {
        return Ok(ForceFieldCache {
            grid: grid.clone(),
            e: vec![0.0; nodes * d],
            grad: parts.gradient.then(|| vec![0.0; nodes * d * d]),
            vpot: parts.potential.then(|| vec![0.0; nodes]),
        });
    }
    let max_spacing = (0..d).map(|a| grid.axis(a).spacing()).fold(0.0, f64::max);
    if width < 2.0 * max_spacing {
        return Err(CoreError::GridRejected {
            reason: format!(
                "kernel width {width} under-resolved: needs at least 2 cells, spacing is {max_spacing}"
            ),
        });
    }

    let padded: Vec<usize> = (0..d).map(|a| 2 * grid.axis(a).points).collect();
    let mut kernels = Vec::new();
    let mut g = vec![0.0; d];
    for alpha in 0..d {
        kernels.push(sample_kernel(grid, &padded, |x| {
            potential.gradient(x, &mut g);
            -g[alpha]
        }));
    }
    let mut hess = vec![0.0; d * d];
    if parts.gradient {
        for alpha in 0..d {
            for beta in 0..d {
                kernels.push(sample_kernel(grid, &padded, |x| {
                    potential.hessian(x, &mut hess);
                    -hess[alpha * d + beta]
                }));
            }
        }
    }
    if parts.potential {
        kernels.push(sample_kernel(grid, &padded, |x| potential.value(x)));
    }
    let results = convolve_with_kernel(grid, &cell_mass, &kernels);

    let mut e = vec![0.0; nodes * d];
    for alpha in 0..d {
        for i in 0..nodes {
            e[i * d + alpha] = results[alpha][i];
        }
    }
    let grad = parts.gradient.then(|| {
        let mut gr = vec![0.0; nodes * d * d];
        for alpha in 0..d {
            for beta in 0..d {
                let comp = &results[d + alpha * d + beta];
                for i in 0..nodes {
                    gr[i * d * d + alpha * d + beta] = comp[i];
                }
            }
        }
        gr
    });
    let vpot = parts.potential.then(|| results.last().unwrap().clone());
    Ok(ForceFieldCache {
        grid: grid.clone(),
        e,
        grad,
        vpot,
    })
}

/// One kick-drift-kick transport step: half kick with the field of the
/// current cloud, full drift, half kick with the field rebuilt from the
/// drifted cloud. Weights are never modified.
pub fn vlasov_step(
    cloud: &PhaseSpaceCloud,
    potential: &TwoBodyPotential,
    grid: &SpatialGrid,
    dt: f64,
) -> Result<PhaseSpaceCloud> {
    if !(dt != 0.0) || !dt.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be nonzero and finite"));
    }
    let field = self_consistent_field(FieldSource::Cloud(cloud), potential, grid, false)?;
    let mut out = cloud.clone();
    kick(&mut out, &field, 0.5 * dt)?;
    drift(&mut out, dt);
    let field = self_consistent_field(FieldSource::Cloud(&out), potential, grid, false)?;
    kick(&mut out, &field, 0.5 * dt)?;
    let t = out.time();
    out.set_time(t + dt);
    Ok(out)
}

fn kick(cloud: &mut PhaseSpaceCloud, field: &ForceFieldCache, dt: f64) -> Result<()> {
    let d = cloud.dimension();
    let n = cloud.n_particles();
    let mut e = [0.0; 3];
    for m in 0..n {
        cic_gather(
            &field.grid,
            &field.e,
            d,
            &cloud.positions()[m * d..(m + 1) * d],
            m,
            cloud.time(),
            &mut e[..d],
        )?;
        for a in 0..d {
            cloud.velocities_mut()[m * d + a] += dt * e[a];
        }
    }
    Ok(())
}

fn drift(cloud: &mut PhaseSpaceCloud, dt: f64) {
    let velocities = cloud.velocities().to_vec();
    for (x, v) in cloud.positions_mut().iter_mut().zip(velocities) {
        *x += dt * v;
    }
}

/// Conservation record of a finished transport run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VlasovRun {
    pub cloud: PhaseSpaceCloud,
    pub steps: usize,
    pub dt_used: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub max_energy_drift: f64,
    pub max_momentum_drift: f64,
}

/// Total energy functional of the cloud through the deposited field:
/// sum w |v|^2/2 + (1/2) sum w (phi * rho)(x).
pub fn cloud_energy(
    cloud: &PhaseSpaceCloud,
    potential: &TwoBodyPotential,
    grid: &SpatialGrid,
) -> Result<f64> {
    let d = cloud.dimension();
    let mut kinetic = 0.0;
    for m in 0..cloud.n_particles() {
        let v = cloud.velocity(m);
        kinetic += 0.5 * cloud.weights()[m] * v.iter().map(|&c| c * c).sum::<f64>();
    }
    if matches!(potential.kind(), PotentialKind::Zero) {
        return Ok(kinetic);
    }
    let cache = field_with_parts(
        FieldSource::Cloud(cloud),
        potential,
        grid,
        FieldParts {
            gradient: false,
            potential: true,
        },
    )?;
    let mut interaction = 0.0;
    for m in 0..cloud.n_particles() {
        let v = cache.potential_at(&cloud.positions()[m * d..(m + 1) * d])?;
        interaction += 0.5 * cloud.weights()[m] * v;
    }
    Ok(kinetic + interaction)
}

/// Evolve the cloud to `t_final`, reusing the closing field of each step as
/// the opening field of the next (one field solve per step).
pub fn evolve_vlasov(
    cloud: PhaseSpaceCloud,
    potential: &TwoBodyPotential,
    grid: &SpatialGrid,
    t_final: f64,
    dt_request: f64,
) -> Result<VlasovRun> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(CoreError::invalid("t_final", "final time must be positive and finite"));
    }
    if !(dt_request > 0.0) || !dt_request.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be positive and finite"));
    }
    let steps = (t_final / dt_request).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut cloud = cloud;
    let d = cloud.dimension();
    let energy_initial = cloud_energy(&cloud, potential, grid)?;
    let mut p0 = vec![0.0; d];
    weighted_momentum(&cloud, &mut p0);
    let mut field = self_consistent_field(FieldSource::Cloud(&cloud), potential, grid, false)?;
    let mut max_energy_drift: f64 = 0.0;
    let mut max_momentum_drift: f64 = 0.0;
    let stride = (steps / 16).max(1);
    let mut p = vec![0.0; d];
    for s in 0..steps {
        kick(&mut cloud, &field, 0.5 * dt)?;
        drift(&mut cloud, dt);
        field = self_consistent_field(FieldSource::Cloud(&cloud), potential, grid, false)?;
        kick(&mut cloud, &field, 0.5 * dt)?;
        let t = cloud.time();
        cloud.set_time(t + dt);
        if s % stride == stride - 1 || s + 1 == steps {
            if cloud.positions().iter().any(|c| !c.is_finite()) {
                return Err(CoreError::Diverged {
                    time: cloud.time(),
                    detail: "non-finite marker coordinates".into(),
                });
            }
            let e = cloud_energy(&cloud, potential, grid)?;
            max_energy_drift = max_energy_drift.max((e - energy_initial).abs());
            weighted_momentum(&cloud, &mut p);
            let drift_p = p
                .iter()
                .zip(&p0)
                .map(|(&a, &b)| (a - b).abs())
                .fold(0.0, f64::max);
            max_momentum_drift = max_momentum_drift.max(drift_p);
        }
    }
    let energy_final = cloud_energy(&cloud, potential, grid)?;
    Ok(VlasovRun {
        cloud,
        steps,
        dt_used: dt,
        energy_initial,
        energy_final,
        max_energy_drift,
        max_momentum_drift,
    })
}

fn weighted_momentum(cloud: &PhaseSpaceCloud, out: &mut [f64]) {
    out.fill(0.0);
    let d = cloud.dimension();
    for m in 0..cloud.n_particles() {
        let v = cloud.velocity(m);
        for a in 0..d {
            out[a] += cloud.weights()[m] * v[a];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{empirical_pairing, monokinetic_init, LoadMode};
    use crate::panel::default_test_panel;
    use crate::stats::gauss_legendre_on;
    use approx::assert_abs_diff_eq;

    fn test_grid(n: usize) -> SpatialGrid {
        SpatialGrid::centered(1, 16.0, n, false).unwrap()
    }

    #[test]
    fn convolution_matches_direct_sum_1d() {
        let grid = test_grid(64);
        let density = DensityProfile::gaussian(&[0.4], &[1.1]).unwrap();
        let field = DensityField::from_profiles(&grid, &density, &PhaseProfile::Zero).unwrap();
        let phi = TwoBodyPotential::gaussian(0.9, 1.3, 1).unwrap();
        let cache =
            self_consistent_field(FieldSource::Density(&field), &phi, &grid, false).unwrap();
        // direct O(n^2) sum over nodes
        let cv = grid.cell_volume();
        let xs = grid.coords(0);
        for i in (0..64).step_by(7) {
            let mut direct = 0.0;
            for j in 0..64 {
                direct -= phi.gradient_1d(xs[i] - xs[j]) * field.rho()[j] * cv;
            }
            assert_abs_diff_eq!(cache.field()[i], direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn convolution_matches_direct_sum_2d() {
        let grid = SpatialGrid::centered(2, 16.0, 32, false).unwrap();
        let density = DensityProfile::gaussian(&[0.0, 0.3], &[1.0, 1.1]).unwrap();
        let field = DensityField::from_profiles(&grid, &density, &PhaseProfile::Zero).unwrap();
        let phi = TwoBodyPotential::gaussian(1.0, 1.6, 2).unwrap();
        let cache =
            self_consistent_field(FieldSource::Density(&field), &phi, &grid, true).unwrap();
        let cv = grid.cell_volume();
        let mut xi = [0.0; 2];
        let mut xj = [0.0; 2];
        let mut g = [0.0; 2];
        let nodes = grid.total_points();
        for i in (0..nodes).step_by(41) {
            grid.node_position(i, &mut xi);
            let mut direct = [0.0; 2];
            for j in 0..nodes {
                grid.node_position(j, &mut xj);
                let dx = [xi[0] - xj[0], xi[1] - xj[1]];
                phi.gradient(&dx, &mut g);
                direct[0] -= g[0] * field.rho()[j] * cv;
                direct[1] -= g[1] * field.rho()[j] * cv;
            }
            assert_abs_diff_eq!(cache.field()[i * 2], direct[0], epsilon = 1e-12);
            assert_abs_diff_eq!(cache.field()[i * 2 + 1], direct[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn narrow_density_recovers_the_kernel() {
        // rho a narrow Gaussian (width 4 cells): E should approximate
        // -grad phi to about (4 spacing / width)^2
        let grid = test_grid(1024);
        let spacing = grid.axis(0).spacing();
        let density = DensityProfile::gaussian(&[0.0], &[4.0 * spacing]).unwrap();
        let field = DensityField::from_profiles(&grid, &density, &PhaseProfile::Zero).unwrap();
        let phi = TwoBodyPotential::gaussian(1.0, 1.0, 1).unwrap();
        let cache =
            self_consistent_field(FieldSource::Density(&field), &phi, &grid, false).unwrap();
        let xs = grid.coords(0);
        for (i, &x) in xs.iter().enumerate() {
            if (0.5..2.0).contains(&x.abs()) {
                let expect = -phi.gradient_1d(x);
                let rel = (cache.field()[i] - expect).abs() / expect.abs();
                assert!(rel < 0.01, "x = {x}: E = {}, kernel = {expect}", cache.field()[i]);
            }
        }
    }

    #[test]
    fn even_density_gives_odd_field() {
        let grid = test_grid(256);
        let density = DensityProfile::gaussian(&[0.0], &[1.2]).unwrap();
        let field = DensityField::from_profiles(&grid, &density, &PhaseProfile::Zero).unwrap();
        let phi = TwoBodyPotential::gaussian(1.0, 1.0, 1).unwrap();
        let cache =
            self_consistent_field(FieldSource::Density(&field), &phi, &grid, false).unwrap();
        let n = 256;
        // node n/2 sits at x = 0 on the centered grid
        assert!(cache.field()[n / 2].abs() < 1e-10);
        for k in 1..(n / 2) {
            let plus = cache.field()[n / 2 + k];
            let minus = cache.field()[n / 2 - k];
            assert_abs_diff_eq!(plus, -minus, epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_bad_kernels_and_grids() {
        let grid = test_grid(64);
        let density = DensityProfile::standard(1).unwrap();
        let field = DensityField::from_profiles(&grid, &density, &PhaseProfile::Zero).unwrap();
        // unbounded kernel
        let harmonic = TwoBodyPotential::harmonic(1.0, 1).unwrap();
        assert!(matches!(
            self_consistent_field(FieldSource::Density(&field), &harmonic, &grid, false),
            Err(CoreError::GridRejected { .. })
        ));
        // kernel narrower than two cells (spacing 0.25)
        let narrow = TwoBodyPotential::gaussian(1.0, 0.3, 1).unwrap();
        assert!(matches!(
            self_consistent_field(FieldSource::Density(&field), &narrow, &grid, false),
            Err(CoreError::GridRejected { .. })
        ));
        // zero potential short-circuits to a zero field
        let zero = TwoBodyPotential::zero(1).unwrap();
        let cache =
            self_consistent_field(FieldSource::Density(&field), &zero, &grid, false).unwrap();
        assert!(cache.field().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn deposition_conserves_mass_and_matches_density() {
        let grid = test_grid(256);
        let density = DensityProfile::standard(1).unwrap();
        let cloud = monokinetic_init(
            4096,
            &density,
            &PhaseProfile::Zero,
            LoadMode::QuantileLattice,
        )
        .unwrap();
        let rho = cic_deposit(&cloud, &grid).unwrap();
        let mass: f64 = rho.iter().sum::<f64>() * grid.cell_volume();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-13);
        // deposited density approximates the smooth profile away from tails
        let xs = grid.coords(0);
        for (i, &x) in xs.iter().enumerate() {
            if x.abs() < 1.5 {
                let expect = density.density(&[x]);
                assert!(
                    (rho[i] - expect).abs() < 0.02,
                    "x = {x}: deposited {}, profile {expect}",
                    rho[i]
                );
            }
        }
    }

    #[test]
    fn free_streaming_markers_are_exact() {
        let grid = test_grid(64);
        let phi = TwoBodyPotential::zero(1).unwrap();
        let cloud = PhaseSpaceCloud::uniform(vec![0.0, 1.0, -1.5], vec![0.5, -0.25, 1.0], 1)
            .unwrap();
        let run = evolve_vlasov(cloud.clone(), &phi, &grid, 2.0, 0.25).unwrap();
        for m in 0..3 {
            assert_abs_diff_eq!(
                run.cloud.positions()[m],
                cloud.positions()[m] + 2.0 * cloud.velocities()[m],
                epsilon = 1e-13
            );
        }
        assert_eq!(run.cloud.weights(), cloud.weights());
    }

    #[test]
    fn single_marker_feels_no_self_force() {
        let grid = test_grid(128);
        let phi = TwoBodyPotential::gaussian(1.0, 1.0, 1).unwrap();
        // marker deliberately off-node
        let cloud = PhaseSpaceCloud::uniform(vec![0.3071], vec![0.25], 1).unwrap();
        let run = evolve_vlasov(cloud, &phi, &grid, 1.0, 0.05).unwrap();
        assert_abs_diff_eq!(run.cloud.velocities()[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(run.cloud.positions()[0], 0.3071 + 0.25, epsilon = 1e-12);
    }

    #[test]
    fn transport_conserves_weights_momentum_and_energy_scaling() {
        let grid = test_grid(256);
        let phi = TwoBodyPotential::gaussian(1.0, 1.0, 1).unwrap();
        let density = DensityProfile::standard(1).unwrap();
        let phase = PhaseProfile::Sine {
            amplitude: 0.3,
            wavenumber: 1.0,
            axis: 0,
        };
        let cloud = monokinetic_init(2048, &density, &phase, LoadMode::QuantileLattice).unwrap();
        let coarse = evolve_vlasov(cloud.clone(), &phi, &grid, 1.0, 0.02).unwrap();
        assert_eq!(coarse.cloud.weights(), cloud.weights());
        assert!(
            coarse.max_momentum_drift < 1e-13,
            "momentum drift {}",
            coarse.max_momentum_drift
        );
        let fine = evolve_vlasov(cloud, &phi, &grid, 1.0, 0.01).unwrap();
        let ratio = coarse.max_energy_drift / fine.max_energy_drift;
        assert!(
            (2.5..6.0).contains(&ratio),
            "energy drift ratio {ratio} (coarse {}, fine {})",
            coarse.max_energy_drift,
            fine.max_energy_drift
        );
    }

    #[test]
    fn weak_transport_residual_shrinks_quadratically() {
        // centered difference of d/dt <f, F> against
        // <f, v dF/dx> + <f, E dF/dv> for every panel function
        let grid = test_grid(256);
        let phi = TwoBodyPotential::gaussian(1.0, 1.0, 1).unwrap();
        let density = DensityProfile::standard(1).unwrap();
        let phase = PhaseProfile::Sine {
            amplitude: 0.3,
            wavenumber: 1.0,
            axis: 0,
        };
        let cloud = monokinetic_init(1024, &density, &phase, LoadMode::QuantileLattice).unwrap();
        let panel = default_test_panel(1).unwrap();
        let field =
            self_consistent_field(FieldSource::Cloud(&cloud), &phi, &grid, false).unwrap();

        let residual = |dt: f64| -> f64 {
            let fwd = vlasov_step(&cloud, &phi, &grid, dt).unwrap();
            let bwd = vlasov_step(&cloud, &phi, &grid, -dt).unwrap();
            let mut worst = 0.0f64;
            for f in panel.iter() {
                let lhs =
                    (empirical_pairing(&fwd, f) - empirical_pairing(&bwd, f)) / (2.0 * dt);
                let mut rhs = 0.0;
                let mut e = [0.0];
                let mut gx = [0.0];
                let mut gv = [0.0];
                for m in 0..cloud.n_particles() {
                    let x = cloud.position(m);
                    let v = cloud.velocity(m);
                    f.grad_x(x, v, &mut gx);
                    f.grad_v(x, v, &mut gv);
                    cic_gather(&grid, field.field(), 1, x, m, 0.0, &mut e).unwrap();
                    rhs += cloud.weights()[m] * (v[0] * gx[0] + e[0] * gv[0]);
                }
                worst = worst.max((lhs - rhs).abs());
            }
            worst
        };
        let r1 = residual(0.02);
        let r2 = residual(0.01);
        assert!(r1 < 1e-4, "residual {r1}");
        let ratio = r1 / r2;
        assert!(
            (2.5..6.0).contains(&ratio),
            "residual ratio {ratio} ({r1} vs {r2})"
        );
    }

    #[test]
    fn monokinetic_pairing_matches_independent_quadrature() {
        let grid = test_grid(512);
        let density = DensityProfile::standard(1).unwrap();
        let phase = PhaseProfile::Quadratic { coeff: 0.3 };
        let field = DensityField::from_profiles(&grid, &density, &phase).unwrap();
        let panel = default_test_panel(1).unwrap();
        let (xs, ws) = gauss_legendre_on(-8.0, 8.0, 200);
        for f in panel.iter() {
            let grid_value = monokinetic_pairing(&field, f);
            let gl: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(&x, &w)| w * density.density(&[x]) * f.eval1(x, 0.3 * x))
                .sum();
            assert_abs_diff_eq!(grid_value, gl, epsilon = 1e-8);
        }
    }

    #[test]
    fn field_rejects_mismatched_sources_and_marker_escape() {
        let grid = test_grid(64);
        let other = test_grid(128);
        let density = DensityProfile::standard(1).unwrap();
        let field = DensityField::from_profiles(&other, &density, &PhaseProfile::Zero).unwrap();
        let phi = TwoBodyPotential::gaussian(1.0, 1.0, 1).unwrap();
        assert!(self_consistent_field(FieldSource::Density(&field), &phi, &grid, false).is_err());

        // marker outside the grid
        let cloud = PhaseSpaceCloud::uniform(vec![9.5], vec![0.0], 1).unwrap();
        assert!(matches!(
            cic_deposit(&cloud, &grid),
            Err(CoreError::MarkerLeftDomain { .. })
        ));

        // negative density rejected
        let nodes = grid.total_points();
        let mut rho = vec![1.0 / (16.0 - 16.0 / 64.0); nodes];
        rho[0] = -0.5;
        assert!(DensityField::new(grid.clone(), rho, vec![0.0; nodes], None, 0.0).is_err());
    }
}
