//! Split-step spectral integration of the mean-field wave equation
//! i h dpsi/dt = -(h^2/2) psi'' + (phi * |psi|^2) psi.
//!
//! One step is a Strang composition: half potential phase with
//! V = phi * |psi|^2 (periodic spectral convolution), full kinetic factor
//! exp(-i h k^2 dt / 2) in Fourier space, half potential phase with V
//! rebuilt from the propagated density. Every factor is a pointwise phase
//! or a unitary transform, so the discrete norm is conserved to round-off.

use crate::error::{CoreError, Result};
use crate::fft::{fft_forward, fft_inverse, wavenumbers, C64};
use crate::grid::SpatialGrid;
use crate::potential::{PotentialKind, TwoBodyPotential};
use crate::quantum::wave::WaveField;
use serde::{Deserialize, Serialize};

/// Forward DFT of the kernel samples on the periodic offset lattice, ready
/// to multiply density transforms. `None` for the zero potential.
pub(crate) struct MeanFieldKernel {
    hat: Option<Vec<C64>>,
    spacing: f64,
}

impl MeanFieldKernel {
    pub(crate) fn build(potential: &TwoBodyPotential, grid: &SpatialGrid) -> Result<Self> {
        if potential.dimension() != 1 {
            return Err(CoreError::invalid("potential", "potential dimension must be 1"));
        }
        let spacing = grid.axis(0).spacing();
        if matches!(potential.kind(), PotentialKind::Zero) {
            return Ok(MeanFieldKernel { hat: None, spacing });
        }
        let width = potential.range().ok_or_else(|| CoreError::GridRejected {
            reason: "mean-field convolution needs a kernel of finite width".into(),
        })?;
        if width < 2.0 * spacing {
            return Err(CoreError::GridRejected {
                reason: format!(
                    "kernel width {width} under-resolved: needs at least 2 cells, spacing is {spacing}"
                ),
            });
        }
        let n = grid.axis(0).points;
        let mut hat: Vec<C64> = (0..n)
            .map(|m| {
                let offset = if m <= n / 2 {
                    m as f64 * spacing
                } else {
                    (m as f64 - n as f64) * spacing
                };
                C64::new(potential.value(&[offset]), 0.0)
            })
            .collect();
        fft_forward(&mut hat);
        Ok(MeanFieldKernel { hat: Some(hat), spacing })
    }

    /// V(x) = sum_j phi(x - x_j) rho_j spacing on the nodes.
    pub(crate) fn apply(&self, density: &[f64]) -> Vec<f64> {
        let Some(hat) = &self.hat else {
            return vec![0.0; density.len()];
        };
        let mut buf: Vec<C64> = density.iter().map(|&r| C64::new(r, 0.0)).collect();
        fft_forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(hat) {
            *b *= k;
        }
        fft_inverse(&mut buf);
        buf.iter().map(|z| z.re * self.spacing).collect()
    }
}

fn apply_potential_phase(psi: &mut WaveField, v: &[f64], dt_half: f64) {
    let h = psi.h();
    for (z, &vi) in psi.values_mut().iter_mut().zip(v) {
        *z *= C64::from_polar(1.0, -vi * dt_half / h);
    }
}

fn apply_kinetic(psi: &mut WaveField, dt: f64, ks: &[f64]) {
    let h = psi.h();
    let values = psi.values_mut();
    fft_forward(values);
    for (z, &k) in values.iter_mut().zip(ks) {
        *z *= C64::from_polar(1.0, -0.5 * h * k * k * dt);
    }
    fft_inverse(values);
}

/// One Strang step. For multi-step evolution prefer `evolve_hartree`, which
/// reuses the closing convolution of each step to open the next.
pub fn hartree_step(
    psi: &WaveField,
    potential: &TwoBodyPotential,
    dt: f64,
) -> Result<WaveField> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be positive and finite"));
    }
    let kernel = MeanFieldKernel::build(potential, psi.grid())?;
    let ks = wavenumbers(psi.values().len(), psi.length());
    let mut out = psi.clone();
    let v = kernel.apply(&out.position_density());
    apply_potential_phase(&mut out, &v, 0.5 * dt);
    apply_kinetic(&mut out, dt, &ks);
    let v = kernel.apply(&out.position_density());
    apply_potential_phase(&mut out, &v, 0.5 * dt);
    let t = out.time();
    out.set_time(t + dt);
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HartreeRun {
    pub psi: WaveField,
    pub steps: usize,
    pub dt_used: f64,
    /// Largest |norm - 1| observed after any step.
    pub max_norm_drift: f64,
}

/// Evolve to `t_final` with one convolution per step (the closing half
/// phase of a step does not change |psi|, so its V opens the next step).
pub fn evolve_hartree(
    psi: &WaveField,
    potential: &TwoBodyPotential,
    t_final: f64,
    dt_request: f64,
) -> Result<HartreeRun> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(CoreError::invalid("t_final", "final time must be positive and finite"));
    }
    if !(dt_request > 0.0) || !dt_request.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be positive and finite"));
    }
    let steps = (t_final / dt_request).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let kernel = MeanFieldKernel::build(potential, psi.grid())?;
    let ks = wavenumbers(psi.values().len(), psi.length());
    let mut out = psi.clone();
    let mut v = kernel.apply(&out.position_density());
    let mut max_norm_drift: f64 = 0.0;
    for s in 0..steps {
        apply_potential_phase(&mut out, &v, 0.5 * dt);
        apply_kinetic(&mut out, dt, &ks);
        v = kernel.apply(&out.position_density());
        apply_potential_phase(&mut out, &v, 0.5 * dt);
        max_norm_drift = max_norm_drift.max((out.norm() - 1.0).abs());
        if s % 64 == 63 && out.values().iter().any(|z| !z.re.is_finite()) {
            return Err(CoreError::Diverged {
                time: psi.time() + dt * (s + 1) as f64,
                detail: "non-finite wave samples".into(),
            });
        }
    }
    let t = psi.time() + t_final;
    out.set_time(t);
    Ok(HartreeRun {
        psi: out,
        steps,
        dt_used: dt,
        max_norm_drift,
    })
}
