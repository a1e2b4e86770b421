//! Mixed states: incoherent superpositions of amplitude profiles indexed
//! by a carrier velocity, and their phase-space distribution.
//!
//! A family holds amplitude samples a(x; w_q) on carrier nodes w_q drawn
//! from the box momentum lattice, with quadrature weights W_q and total
//! occupation sum_q W_q int |a_q|^2 = 1. Because every carrier sits on the
//! momentum lattice, each member's distribution is the carrier-free one
//! shifted by a whole number of velocity bins, so the family distribution
//! assembles without any velocity interpolation: it is the weighted sum of
//! member transforms, exact identities intact.

use crate::error::{CoreError, Result};
use crate::fft::C64;
use crate::grid::SpatialGrid;
use crate::profile::DensityProfile;
use crate::quantum::wave::{momentum_quantum, WaveField};
use crate::quantum::wigner::{wigner_transform, WignerGrid};
use serde::{Deserialize, Serialize};

/// Carrier lattice spacing must stay below this multiple of the velocity
/// profile width or the carrier quadrature cannot resolve it.
const MAX_CARRIER_SPACING: f64 = 1.0;

/// Amplitude family over carrier velocity nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixedWKBFamily {
    amplitudes: Vec<Vec<C64>>,
    carriers: Vec<f64>,
    weights: Vec<f64>,
    grid: SpatialGrid,
    h: f64,
}

impl MixedWKBFamily {
    /// Build from explicit members. Carriers must sit on the box momentum
    /// lattice, weights must be positive, and the total occupation
    /// sum_q W_q int |a_q|^2 dx must be 1 to 1e-8.
    pub fn new(
        amplitudes: Vec<Vec<C64>>,
        carriers: Vec<f64>,
        weights: Vec<f64>,
        grid: SpatialGrid,
        h: f64,
    ) -> Result<Self> {
        if grid.dimension() != 1 || !grid.periodic() {
            return Err(CoreError::invalid(
                "grid",
                "mixed families need a one-dimensional periodic grid",
            ));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(CoreError::invalid("h", "scale parameter must be positive and finite"));
        }
        if amplitudes.is_empty()
            || amplitudes.len() != carriers.len()
            || amplitudes.len() != weights.len()
        {
            return Err(CoreError::invalid(
                "family",
                "need matching, non-empty amplitude, carrier, and weight lists",
            ));
        }
        let n = grid.total_points();
        let quantum = momentum_quantum(&grid, h);
        for (q, a) in amplitudes.iter().enumerate() {
            if a.len() != n {
                return Err(CoreError::invalid("family", "amplitude sample count must match the grid"));
            }
            if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(CoreError::invalid("family", "amplitude samples must be finite"));
            }
            let m = carriers[q] / quantum;
            if !carriers[q].is_finite() || (m - m.round()).abs() > 1e-9 * m.abs().max(1.0) {
                return Err(CoreError::invalid(
                    "carriers",
                    format!(
                        "carrier {} is not a multiple of the box momentum {quantum:.6e}",
                        carriers[q]
                    ),
                ));
            }
            if !(weights[q] > 0.0) || !weights[q].is_finite() {
                return Err(CoreError::invalid("weights", "carrier weights must be positive"));
            }
        }
        let family = MixedWKBFamily {
            amplitudes,
            carriers,
            weights,
            grid,
            h,
        };
        let defect = (family.trace() - 1.0).abs();
        if defect > 1e-8 {
            return Err(CoreError::NotNormalized {
                what: "family occupation".into(),
                defect,
                tol: 1e-8,
            });
        }
        Ok(family)
    }

    /// Family with |a(x, w)|^2 = rho_x(x) rho_v(w): position and carrier
    /// velocity independent, both Gaussian. Carriers are placed on a
    /// uniform sublattice of the box momentum lattice, spaced closely
    /// enough to resolve rho_v and covering its support; weights are the
    /// rectangle rule renormalized to unit occupation.
    pub fn product_gaussian(
        x_density: &DensityProfile,
        v_density: &DensityProfile,
        grid: &SpatialGrid,
        h: f64,
    ) -> Result<Self> {
        if x_density.dimension() != 1 || v_density.dimension() != 1 {
            return Err(CoreError::invalid("profiles", "product families are one-dimensional"));
        }
        if grid.dimension() != 1 || !grid.periodic() {
            return Err(CoreError::invalid(
                "grid",
                "mixed families need a one-dimensional periodic grid",
            ));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(CoreError::invalid("h", "scale parameter must be positive and finite"));
        }
        let quantum = momentum_quantum(grid, h);
        let sigma_w = v_density.std(0);
        let stride = ((0.6 * sigma_w / quantum).round() as usize).max(1);
        let spacing = stride as f64 * quantum;
        if spacing > MAX_CARRIER_SPACING * sigma_w {
            return Err(CoreError::GridRejected {
                reason: format!(
                    "carrier lattice spacing {spacing:.3e} cannot resolve a velocity profile of width {sigma_w:.3e}"
                ),
            });
        }
        let mean_w = v_density.mean(0);
        let span = 8.5 * sigma_w;
        let j_lo = ((mean_w - span) / spacing).ceil() as i64;
        let j_hi = ((mean_w + span) / spacing).floor() as i64;
        if j_hi < j_lo {
            return Err(CoreError::invalid("profiles", "velocity profile support holds no carrier node"));
        }

        let xs = grid.coords(0);
        let dx = grid.axis(0).spacing();
        let root_x: Vec<f64> = xs.iter().map(|&x| x_density.sqrt_density(&[x])).collect();
        let edge: f64 = [0, 1, xs.len() - 2, xs.len() - 1]
            .iter()
            .map(|&i| root_x[i] * root_x[i] * dx)
            .sum();
        if edge > 1e-8 {
            return Err(CoreError::GridRejected {
                reason: format!("position density carries mass {edge:.3e} in the boundary cells"),
            });
        }

        let mut amplitudes = Vec::new();
        let mut carriers = Vec::new();
        let mut weights = Vec::new();
        for j in j_lo..=j_hi {
            let w = j as f64 * spacing;
            let root_v = v_density.density(&[w]).sqrt();
            if root_v * root_v * spacing < 1e-14 {
                continue; // vacuum carrier node, transports nothing
            }
            amplitudes.push(root_x.iter().map(|&r| C64::new(r * root_v, 0.0)).collect());
            carriers.push(w);
            weights.push(spacing);
        }
        // renormalize the rectangle rule to exact unit occupation
        let mut family = MixedWKBFamily {
            amplitudes,
            carriers,
            weights,
            grid: grid.clone(),
            h,
        };
        let trace = family.trace();
        if !(trace > 0.0) {
            return Err(CoreError::invalid("profiles", "family occupation vanished"));
        }
        for w in &mut family.weights {
            *w /= trace;
        }
        Ok(family)
    }

    pub fn len(&self) -> usize {
        self.carriers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carriers.is_empty()
    }

    pub fn carriers(&self) -> &[f64] {
        &self.carriers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn amplitude(&self, q: usize) -> &[C64] {
        &self.amplitudes[q]
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total occupation sum_q W_q int |a_q|^2 dx.
    pub fn trace(&self) -> f64 {
        let dx = self.grid.axis(0).spacing();
        self.amplitudes
            .iter()
            .zip(&self.weights)
            .map(|(a, &w)| w * a.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx)
            .sum()
    }

    /// Position density sum_q W_q |a_q(x)|^2.
    pub fn position_density(&self) -> Vec<f64> {
        let n = self.grid.total_points();
        let mut out = vec![0.0; n];
        for (a, &w) in self.amplitudes.iter().zip(&self.weights) {
            for (o, z) in out.iter_mut().zip(a) {
                *o += w * z.norm_sqr();
            }
        }
        out
    }
}

/// Phase-space distribution of the family: the weighted sum of member
/// distributions, each member being its amplitude modulated by its carrier.
/// Velocity shifts are exact bin shifts, so the member identities
/// (marginal recovery, realness) survive the superposition.
pub fn mixed_wigner(family: &MixedWKBFamily) -> Result<WignerGrid> {
    let n = family.grid.total_points();
    let dx = family.grid.axis(0).spacing();
    let xs = family.grid.coords(0);

    let mut total: Option<WignerGrid> = None;
    for q in 0..family.len() {
        let mass: f64 = family.amplitudes[q].iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
        if mass * family.weights[q] < 1e-16 {
            continue;
        }
        let scale = mass.sqrt().recip();
        let values: Vec<C64> = family.amplitudes[q]
            .iter()
            .zip(&xs)
            .map(|(z, &x)| z * scale * C64::from_polar(1.0, family.carriers[q] * x / family.h))
            .collect();
        let member = WaveField::new(values, family.grid.clone(), family.h, 0.0)?;
        let f = wigner_transform(&member)?;
        let coeff = family.weights[q] * mass;
        match &mut total {
            None => {
                let mut first = f;
                first.scale_accumulate_init(coeff);
                total = Some(first);
            }
            Some(acc) => acc.scale_accumulate(coeff, &f)?,
        }
    }
    let mut out = total.ok_or_else(|| CoreError::invalid("family", "no carrier node carries mass"))?;

    // re-measure the marginal identity on the assembled distribution
    let expected = family.position_density();
    let peak = expected.iter().cloned().fold(0.0_f64, f64::max);
    let defect = out
        .x_marginal()
        .iter()
        .zip(&expected)
        .map(|(m, e)| (m - e).abs())
        .fold(0.0_f64, f64::max);
    out.set_marginal_defect(if peak > 0.0 { defect / peak } else { 0.0 });
    let _ = n;
    Ok(out)
}
