//! Amplitude-phase form of the mean-field wave dynamics.
//!
//! The state is a complex amplitude a(x) and a real phase written as a
//! constant carrier slope p plus a periodic part sigma(x). They evolve by
//!
//!   d_t sigma = -(p + sigma')^2 / 2 - V,       V = phi * |a|^2,
//!   d_t a     = -(p + sigma') a' - (a/2) sigma''  [+ i (h/2) a''],
//!
//! stepped with a three-stage strong-stability Runge-Kutta scheme and
//! spectral derivatives. The grid only has to resolve the smooth fields,
//! never the 1/h oscillation, which is the whole point: the same initial
//! data can be run at any h, with the dispersive correction switched on or
//! off, and reconstructed into a wavefunction when a fine enough grid is
//! supplied.
//!
//! The phase equation steepens where the flow compresses. A transported
//! Jacobian proxy J with dJ/dt = J min_x(sigma'') tracks the compression
//! and the run aborts just before the fold, where the single-phase form
//! stops being meaningful; a spectral monitor on sigma' catches grid-scale
//! oscillation from any other source.

use crate::error::{CoreError, Result};
use crate::fft::{fft_forward, fft_inverse, wavenumbers, C64};
use crate::grid::SpatialGrid;
use crate::potential::TwoBodyPotential;
use crate::profile::{AmplitudeProfile, PhaseProfile};
use crate::quantum::hartree::MeanFieldKernel;
use crate::quantum::wave::{momentum_quantum, validate_carrier_phase, WaveField};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Imaginary-axis stability reach of the three-stage scheme, with margin.
const STABILITY_LIMIT: f64 = 1.7320508075688772 * 0.9; // sqrt(3) * 0.9
/// Jacobian proxy floor; mirrors the fluid solver's caustic floor.
const JACOBIAN_FLOOR: f64 = 0.05;
/// Fraction of sigma' spectral energy allowed in the top quarter band.
const OSCILLATION_TOL: f64 = 1e-3;

/// Amplitude and phase samples with a constant carrier slope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WkbFields {
    a: Vec<C64>,
    sigma: Vec<f64>,
    p_mean: f64,
    grid: SpatialGrid,
    h: f64,
    time: f64,
}

impl WkbFields {
    /// Build from raw samples. The amplitude mass must already be 1 to
    /// 1e-8 and the carrier slope must sit on the box momentum lattice.
    pub fn new(
        a: Vec<C64>,
        sigma: Vec<f64>,
        p_mean: f64,
        grid: SpatialGrid,
        h: f64,
        time: f64,
    ) -> Result<Self> {
        if grid.dimension() != 1 || !grid.periodic() {
            return Err(CoreError::invalid(
                "grid",
                "amplitude-phase fields need a one-dimensional periodic grid",
            ));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(CoreError::invalid("h", "scale parameter must be positive and finite"));
        }
        let n = grid.total_points();
        if a.len() != n || sigma.len() != n {
            return Err(CoreError::invalid("fields", "sample count must match the grid"));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
            || sigma.iter().any(|s| !s.is_finite())
            || !p_mean.is_finite()
        {
            return Err(CoreError::invalid("fields", "samples must be finite"));
        }
        let quantum = momentum_quantum(&grid, h);
        let m = p_mean / quantum;
        if (m - m.round()).abs() > 1e-9 * m.abs().max(1.0) {
            return Err(CoreError::invalid(
                "p_mean",
                format!("carrier slope {p_mean} is not a multiple of the box momentum {quantum:.6e}"),
            ));
        }
        let fields = WkbFields { a, sigma, p_mean, grid, h, time };
        let defect = (fields.amp_mass() - 1.0).abs();
        if defect > 1e-8 {
            return Err(CoreError::NotNormalized {
                what: "amplitude mass".into(),
                defect,
                tol: 1e-8,
            });
        }
        Ok(fields)
    }

    pub fn amplitude(&self) -> &[C64] {
        &self.a
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn p_mean(&self) -> f64 {
        self.p_mean
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn spacing(&self) -> f64 {
        self.grid.axis(0).spacing()
    }

    /// Position density |a|^2.
    pub fn gamma(&self) -> Vec<f64> {
        self.a.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Discrete mass of the amplitude, conserved by the dynamics.
    pub fn amp_mass(&self) -> f64 {
        let dx = self.spacing();
        self.a.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx
    }

    /// Transport velocity p + sigma'.
    pub fn momentum_field(&self) -> Vec<f64> {
        let (ds, _) = derivatives_r(&self.sigma, self.length());
        ds.iter().map(|&s| self.p_mean + s).collect()
    }

    /// Current correction -h Im(conj(a) Lap a); vanishes identically for
    /// real amplitudes and equals -h (gamma theta')' for a = |a| e^{i theta}.
    pub fn commutator_b(&self) -> Vec<f64> {
        let (_, lap) = derivatives_c(&self.a, self.length());
        self.a
            .iter()
            .zip(&lap)
            .map(|(z, l)| -self.h * (z.conj() * l).im)
            .collect()
    }

    /// L2 norm of the amplitude gradient.
    pub fn h1_norm(&self) -> f64 {
        let (da, _) = derivatives_c(&self.a, self.length());
        (da.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()).sqrt()
    }

    /// Sample psi = a exp(i (p x + sigma)/h) on this grid. The grid must
    /// resolve the full oscillation, which is a stronger requirement than
    /// the field evolution itself needed.
    pub fn reconstruct_wave(&self) -> Result<WaveField> {
        let (ds, _) = derivatives_r(&self.sigma, self.length());
        let max_grad = ds
            .iter()
            .map(|&s| (self.p_mean + s).abs())
            .fold(0.0_f64, f64::max);
        let allowed = self.h / (4.0 * max_grad + 1.0);
        let spacing = self.spacing();
        if spacing > allowed {
            let required = (self.length() / allowed).ceil() as usize;
            return Err(CoreError::UnderResolved {
                spacing,
                allowed,
                required_points: required.next_power_of_two().max(16),
            });
        }
        let xs = self.grid.coords(0);
        let values: Vec<C64> = xs
            .iter()
            .zip(self.a.iter().zip(&self.sigma))
            .map(|(&x, (a, s))| a * C64::from_polar(1.0, (self.p_mean * x + s) / self.h))
            .collect();
        WaveField::normalized(values, self.grid.clone(), self.h, self.time)
    }

    fn length(&self) -> f64 {
        self.grid.axis(0).extent()
    }
}

/// Sample amplitude and phase profiles into fields. A linear phase becomes
/// the carrier slope (validated against the box momentum lattice); sine
/// phases become the periodic part; quadratic phases cannot wrap and are
/// rejected. The grid only needs to resolve the profiles, not h.
pub fn wkb_fields_initialize(
    amplitude: &AmplitudeProfile,
    sigma: &PhaseProfile,
    h: f64,
    grid: &SpatialGrid,
) -> Result<WkbFields> {
    if grid.dimension() != 1 || !grid.periodic() {
        return Err(CoreError::invalid(
            "grid",
            "amplitude-phase fields need a one-dimensional periodic grid",
        ));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(CoreError::invalid("h", "scale parameter must be positive and finite"));
    }
    if amplitude.dimension() != 1 {
        return Err(CoreError::invalid("amplitude", "amplitude profile must be one-dimensional"));
    }
    sigma.validate_dimension(1)?;
    validate_carrier_phase(sigma, grid, h)?;

    let (p_mean, periodic): (f64, Box<dyn Fn(f64) -> f64>) = match sigma {
        PhaseProfile::Linear { slope } => (slope[0], Box::new(|_| 0.0)),
        other => {
            let o = other.clone();
            (0.0, Box::new(move |x| o.sigma1(x)))
        }
    };

    let xs = grid.coords(0);
    let mut a: Vec<C64> = xs.iter().map(|&x| amplitude.value1(x)).collect();
    let sig: Vec<f64> = xs.iter().map(|&x| periodic(x)).collect();

    let dx = grid.axis(0).spacing();
    let mass: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
    if !(mass > 0.0) || (mass - 1.0).abs() > 0.05 {
        return Err(CoreError::NotNormalized {
            what: "sampled amplitude mass".into(),
            defect: (mass - 1.0).abs(),
            tol: 0.05,
        });
    }
    let scale = mass.sqrt().recip();
    for z in &mut a {
        *z *= scale;
    }
    let n = xs.len();
    let edge: f64 = [0, 1, n - 2, n - 1]
        .iter()
        .map(|&i| a[i].norm_sqr() * dx)
        .sum();
    if edge > 1e-8 {
        return Err(CoreError::GridRejected {
            reason: format!("amplitude carries mass {edge:.3e} in the boundary cells; enlarge the box"),
        });
    }
    WkbFields::new(a, sig, p_mean, grid.clone(), h, 0.0)
}

/// First and second spectral derivatives of a real field from one forward
/// transform. The Nyquist mode is dropped from the odd derivative and kept
/// (with -k^2) in the even one.
fn derivatives_r(values: &[f64], length: f64) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let mut hat: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft_forward(&mut hat);
    let ks = wavenumbers(n, length);
    let mut d1 = hat.clone();
    for (j, z) in d1.iter_mut().enumerate() {
        *z *= if j == n / 2 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, ks[j])
        };
    }
    let mut d2 = hat;
    for (z, &k) in d2.iter_mut().zip(&ks) {
        *z *= -k * k;
    }
    fft_inverse(&mut d1);
    fft_inverse(&mut d2);
    (
        d1.iter().map(|z| z.re).collect(),
        d2.iter().map(|z| z.re).collect(),
    )
}

/// Complex counterpart of [`derivatives_r`].
fn derivatives_c(values: &[C64], length: f64) -> (Vec<C64>, Vec<C64>) {
    let n = values.len();
    let mut hat = values.to_vec();
    fft_forward(&mut hat);
    let ks = wavenumbers(n, length);
    let mut d1 = hat.clone();
    for (j, z) in d1.iter_mut().enumerate() {
        *z *= if j == n / 2 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, ks[j])
        };
    }
    let mut d2 = hat;
    for (z, &k) in d2.iter_mut().zip(&ks) {
        *z *= -k * k;
    }
    fft_inverse(&mut d1);
    fft_inverse(&mut d2);
    (d1, d2)
}

struct Rhs {
    dsigma: Vec<f64>,
    da: Vec<C64>,
    max_velocity: f64,
    min_lap_sigma: f64,
}

fn rhs(
    sigma: &[f64],
    a: &[C64],
    p_mean: f64,
    h: f64,
    length: f64,
    kernel: &MeanFieldKernel,
    include_h_term: bool,
) -> Rhs {
    let (ds, dds) = derivatives_r(sigma, length);
    let (da1, da2) = derivatives_c(a, length);
    let gamma: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
    let v = kernel.apply(&gamma);

    let mut max_velocity = 0.0_f64;
    let mut min_lap = f64::INFINITY;
    let mut dsigma = vec![0.0; sigma.len()];
    let mut da = vec![C64::new(0.0, 0.0); a.len()];
    for i in 0..sigma.len() {
        let u = p_mean + ds[i];
        max_velocity = max_velocity.max(u.abs());
        min_lap = min_lap.min(dds[i]);
        dsigma[i] = -0.5 * u * u - v[i];
        let mut z = -da1[i] * u - a[i] * (0.5 * dds[i]);
        if include_h_term {
            z += C64::new(0.0, 0.5 * h) * da2[i];
        }
        da[i] = z;
    }
    Rhs {
        dsigma,
        da,
        max_velocity,
        min_lap_sigma: min_lap,
    }
}

/// Check the explicit step against the advective and (when the dispersive
/// term is on) parabolic-in-k spectral radii.
fn guard_step(dt: f64, max_velocity: f64, h: f64, dx: f64, include_h_term: bool) -> Result<()> {
    let k_max = PI / dx;
    let mut rate = max_velocity * k_max;
    if include_h_term {
        rate += 0.5 * h * k_max * k_max;
    }
    if dt * rate > STABILITY_LIMIT {
        return Err(CoreError::StepTooLarge {
            dt,
            limit: STABILITY_LIMIT / rate,
            scheme: "amplitude-phase transport (three-stage Runge-Kutta)".into(),
        });
    }
    Ok(())
}

/// One strong-stability three-stage Runge-Kutta step. Returns the new
/// fields and the minimum sigma'' seen at the first stage (the caustic
/// monitors feed on it).
fn rk3_step(
    fields: &WkbFields,
    kernel: &MeanFieldKernel,
    dt: f64,
    include_h_term: bool,
) -> Result<(Vec<f64>, Vec<C64>, f64)> {
    let length = fields.length();
    let dx = fields.spacing();
    let (p, h) = (fields.p_mean, fields.h);

    let k1 = rhs(&fields.sigma, &fields.a, p, h, length, kernel, include_h_term);
    guard_step(dt, k1.max_velocity, h, dx, include_h_term)?;
    let s1: Vec<f64> = fields
        .sigma
        .iter()
        .zip(&k1.dsigma)
        .map(|(&s, &d)| s + dt * d)
        .collect();
    let a1: Vec<C64> = fields
        .a
        .iter()
        .zip(&k1.da)
        .map(|(&z, &d)| z + d * dt)
        .collect();

    let k2 = rhs(&s1, &a1, p, h, length, kernel, include_h_term);
    let s2: Vec<f64> = fields
        .sigma
        .iter()
        .zip(s1.iter().zip(&k2.dsigma))
        .map(|(&s, (&t, &d))| 0.75 * s + 0.25 * (t + dt * d))
        .collect();
    let a2: Vec<C64> = fields
        .a
        .iter()
        .zip(a1.iter().zip(&k2.da))
        .map(|(&z, (&w, &d))| z * 0.75 + (w + d * dt) * 0.25)
        .collect();

    let k3 = rhs(&s2, &a2, p, h, length, kernel, include_h_term);
    let s3: Vec<f64> = fields
        .sigma
        .iter()
        .zip(s2.iter().zip(&k3.dsigma))
        .map(|(&s, (&t, &d))| s / 3.0 + 2.0 / 3.0 * (t + dt * d))
        .collect();
    let a3: Vec<C64> = fields
        .a
        .iter()
        .zip(a2.iter().zip(&k3.da))
        .map(|(&z, (&w, &d))| z / 3.0 + (w + d * dt) * (2.0 / 3.0))
        .collect();

    Ok((s3, a3, k1.min_lap_sigma))
}

/// Advance the fields by one step of size dt under the self-consistent
/// potential phi * |a|^2.
pub fn grenier_system_step(
    fields: &WkbFields,
    phi: &TwoBodyPotential,
    dt: f64,
    include_h_term: bool,
) -> Result<WkbFields> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be positive and finite"));
    }
    let kernel = MeanFieldKernel::build(phi, &fields.grid)?;
    let (sigma, a, _) = rk3_step(fields, &kernel, dt, include_h_term)?;
    Ok(WkbFields {
        a,
        sigma,
        p_mean: fields.p_mean,
        grid: fields.grid.clone(),
        h: fields.h,
        time: fields.time + dt,
    })
}

/// Outcome of an amplitude-phase run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrenierRun {
    pub fields: WkbFields,
    pub steps: usize,
    pub dt_used: f64,
    /// max |amplitude mass - 1| over the run; the dynamics conserve it.
    pub amp_mass_drift: f64,
    /// smallest value of the transported Jacobian proxy.
    pub min_caustic_proxy: f64,
    /// (time, ||a'||) samples, including both endpoints.
    pub h1_series: Vec<(f64, f64)>,
}

/// Evolve to t_final with steps of roughly dt_request, watching for
/// compression folds and grid-scale oscillation.
///
/// The Jacobian proxy J starts at 1 and obeys dJ/dt = J min_x sigma''; for
/// a compressing flow it tracks the Lagrangian Jacobian and the run aborts
/// with a caustic report when it reaches 0.05, extrapolating the crossing
/// time. Grid-scale energy in sigma' (top quarter of the spectrum holding
/// more than a 1e-3 fraction) aborts as divergence.
pub fn evolve_grenier(
    init: &WkbFields,
    phi: &TwoBodyPotential,
    t_final: f64,
    dt_request: f64,
    include_h_term: bool,
    h1_samples: usize,
) -> Result<GrenierRun> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(CoreError::invalid("t_final", "final time must be positive and finite"));
    }
    if !(dt_request > 0.0) || !dt_request.is_finite() {
        return Err(CoreError::invalid("dt", "time step must be positive and finite"));
    }
    let steps = (t_final / dt_request).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let kernel = MeanFieldKernel::build(phi, &init.grid)?;

    let mut fields = init.clone();
    let mut proxy = 1.0_f64;
    let mut min_proxy = 1.0_f64;
    let mut drift = (fields.amp_mass() - 1.0).abs();
    let mut h1_series = Vec::new();
    let sample_every = if h1_samples > 0 {
        (steps / h1_samples).max(1)
    } else {
        usize::MAX
    };
    if h1_samples > 0 {
        h1_series.push((fields.time, fields.h1_norm()));
    }

    for step in 0..steps {
        oscillation_guard(&fields)?;
        let (sigma, a, min_lap) = rk3_step(&fields, &kernel, dt, include_h_term)?;
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
            || sigma.iter().any(|s| !s.is_finite())
        {
            return Err(CoreError::Diverged {
                time: fields.time,
                detail: "non-finite amplitude or phase sample".into(),
            });
        }
        fields.sigma = sigma;
        fields.a = a;
        fields.time = init.time + dt * (step + 1) as f64;

        let proxy_prev = proxy;
        proxy *= 1.0 + dt * min_lap;
        min_proxy = min_proxy.min(proxy);
        if proxy <= JACOBIAN_FLOOR {
            let rate = proxy_prev - proxy;
            let estimated = if rate > 0.0 {
                fields.time + proxy * dt / rate
            } else {
                fields.time
            };
            return Err(CoreError::CausticAbort {
                time: fields.time,
                min_jacobian: proxy,
                estimated_caustic_time: estimated,
            });
        }

        drift = drift.max((fields.amp_mass() - 1.0).abs());
        if (step + 1) % sample_every == 0 || step + 1 == steps {
            if h1_samples > 0 {
                h1_series.push((fields.time, fields.h1_norm()));
            }
        }
    }

    Ok(GrenierRun {
        fields,
        steps,
        dt_used: dt,
        amp_mass_drift: drift,
        min_caustic_proxy: min_proxy,
        h1_series,
    })
}

/// ||a'|| samples along the run; thin wrapper over [`evolve_grenier`].
pub fn h1_norm_track(
    init: &WkbFields,
    phi: &TwoBodyPotential,
    t_final: f64,
    dt_request: f64,
    include_h_term: bool,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    let run = evolve_grenier(init, phi, t_final, dt_request, include_h_term, samples.max(1))?;
    Ok(run.h1_series)
}

/// Reject fields whose transport velocity has grid-scale content: the
/// single-phase description has broken down (or was fed noise).
fn oscillation_guard(fields: &WkbFields) -> Result<()> {
    let n = fields.sigma.len();
    let mut hat: Vec<C64> = fields.sigma.iter().map(|&s| C64::new(s, 0.0)).collect();
    fft_forward(&mut hat);
    let ks = wavenumbers(n, fields.length());
    let mut total = 0.0;
    let mut high = 0.0;
    let k_max = PI / fields.spacing();
    for (j, z) in hat.iter().enumerate() {
        if j == 0 {
            continue; // the mean carries no gradient
        }
        let e = (ks[j] * ks[j]) * z.norm_sqr();
        total += e;
        if ks[j].abs() >= 0.75 * k_max {
            high += e;
        }
    }
    if total > 1e-30 && high / total > OSCILLATION_TOL {
        return Err(CoreError::Diverged {
            time: fields.time,
            detail: format!(
                "grid-scale oscillation in the momentum field (fraction {:.3e})",
                high / total
            ),
        });
    }
    Ok(())
}
