//! Discrete wave fields and their WKB initialization.

use crate::error::{CoreError, Result};
use crate::fft::{fft_forward, wavenumbers, C64};
use crate::grid::SpatialGrid;
use crate::profile::{AmplitudeProfile, PhaseProfile};
use serde::{Deserialize, Serialize};

/// Complex wave samples on a periodic one-dimensional grid, together with
/// the scale parameter h. Discrete L2 norm is 1 to 1e-10 at rest; solvers
/// that own a field mutably are responsible for restoring the invariant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveField {
    values: Vec<C64>,
    grid: SpatialGrid,
    h: f64,
    time: f64,
}

impl WaveField {
    pub fn new(values: Vec<C64>, grid: SpatialGrid, h: f64, time: f64) -> Result<Self> {
        let field = WaveField::unchecked(values, grid, h, time)?;
        field.validate_norm(1e-10)?;
        Ok(field)
    }

    /// Construct and rescale to unit norm. Rejects data whose discrete mass
    /// differs from 1 by more than 5 percent, which always means the grid
    /// clipped the state rather than sampled it.
    pub fn normalized(values: Vec<C64>, grid: SpatialGrid, h: f64, time: f64) -> Result<Self> {
        let mut field = WaveField::unchecked(values, grid, h, time)?;
        let norm = field.norm();
        if (norm - 1.0).abs() > 0.05 {
            return Err(CoreError::GridRejected {
                reason: format!("state mass {:.4} off unit before normalization; grid clips the data", norm * norm),
            });
        }
        for z in &mut field.values {
            *z /= norm;
        }
        Ok(field)
    }

    fn unchecked(values: Vec<C64>, grid: SpatialGrid, h: f64, time: f64) -> Result<Self> {
        if grid.dimension() != 1 {
            return Err(CoreError::invalid(
                "grid",
                "wave fields are one-dimensional in this laboratory",
            ));
        }
        if !grid.periodic() {
            return Err(CoreError::invalid("grid", "wave fields need a periodic grid"));
        }
        if values.len() != grid.total_points() {
            return Err(CoreError::invalid("values", "sample count must match the grid"));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(CoreError::invalid("h", "scale parameter must be positive and finite"));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::invalid("values", "samples must be finite"));
        }
        Ok(WaveField {
            values,
            grid,
            h,
            time,
        })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
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

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn spacing(&self) -> f64 {
        self.grid.axis(0).spacing()
    }

    pub fn length(&self) -> f64 {
        self.grid.axis(0).extent()
    }

    /// Discrete L2 norm sqrt(sum |psi|^2 spacing).
    pub fn norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        (s * self.spacing()).sqrt()
    }

    pub fn validate_norm(&self, tol: f64) -> Result<()> {
        let defect = (self.norm() - 1.0).abs();
        if defect > tol {
            return Err(CoreError::NotNormalized {
                what: "wave field".into(),
                defect,
                tol,
            });
        }
        Ok(())
    }

    /// |psi|^2 at the nodes.
    pub fn position_density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Mass carried by the outermost two cells on each side; nonzero values
    /// mean the box is too small for the state.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.values.len();
        let dx = self.spacing();
        let idx = [0, 1, n - 2, n - 1];
        idx.iter().map(|&i| self.values[i].norm_sqr() * dx).sum()
    }

    /// Momentum lattice v_j = h k_j and the mass each mode carries
    /// (masses sum to 1 for a unit-norm field).
    pub fn momentum_spectrum(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.values.len();
        let mut buf = self.values.clone();
        fft_forward(&mut buf);
        let scale = self.spacing() / n as f64;
        let masses: Vec<f64> = buf.iter().map(|z| z.norm_sqr() * scale).collect();
        let vs: Vec<f64> = wavenumbers(n, self.length())
            .into_iter()
            .map(|k| self.h * k)
            .collect();
        (vs, masses)
    }

    pub fn expect_position(&self) -> f64 {
        let xs = self.grid.coords(0);
        let dx = self.spacing();
        xs.iter()
            .zip(&self.values)
            .map(|(&x, z)| x * z.norm_sqr() * dx)
            .sum()
    }

    pub fn expect_position_sq(&self) -> f64 {
        let xs = self.grid.coords(0);
        let dx = self.spacing();
        xs.iter()
            .zip(&self.values)
            .map(|(&x, z)| x * x * z.norm_sqr() * dx)
            .sum()
    }

    /// <psi, -i h d/dx psi> via the momentum spectrum.
    pub fn expect_momentum(&self) -> f64 {
        let (vs, masses) = self.momentum_spectrum();
        vs.iter().zip(&masses).map(|(&v, &m)| v * m).sum()
    }

    /// Discrete L2 distance to another field on the same grid.
    pub fn l2_distance(&self, other: &WaveField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(CoreError::invalid("other", "fields live on different grids"));
        }
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.spacing()).sqrt())
    }
}

/// Smallest momentum the periodic box supports for the phase sigma/h: linear
/// phase slopes must be integer multiples of this for exp(i sigma/h) to wrap
/// continuously.
pub fn momentum_quantum(grid: &SpatialGrid, h: f64) -> f64 {
    2.0 * std::f64::consts::PI * h / grid.axis(0).extent()
}

/// Check that a phase profile is compatible with a periodic box of the given
/// length when divided by `scale` (scale = h for the carrier phase, 1 for
/// amplitude modulation).
fn validate_periodic_phase(
    phase: &PhaseProfile,
    length: f64,
    scale: f64,
    what: &str,
) -> Result<()> {
    let lattice = 2.0 * std::f64::consts::PI * scale / length;
    match phase {
        PhaseProfile::Zero => Ok(()),
        PhaseProfile::Linear { slope } => {
            let w = slope[0];
            let m = w / lattice;
            if (m - m.round()).abs() > 1e-9 * m.abs().max(1.0) {
                return Err(CoreError::invalid(
                    what,
                    format!(
                        "linear phase slope {w} is not a multiple of the box momentum {lattice:.6e}"
                    ),
                ));
            }
            Ok(())
        }
        PhaseProfile::Quadratic { .. } => Err(CoreError::invalid(
            what,
            "quadratic phase does not wrap on a periodic box; caustic studies belong to the fluid solver",
        )),
        PhaseProfile::Sine { wavenumber, .. } => {
            let m = wavenumber * length / (2.0 * std::f64::consts::PI);
            if (m - m.round()).abs() > 1e-9 * m.abs().max(1.0) {
                return Err(CoreError::invalid(
                    what,
                    format!("sine wavenumber {wavenumber} does not fit the box of length {length}"),
                ));
            }
            Ok(())
        }
    }
}

pub(crate) fn validate_carrier_phase(
    phase: &PhaseProfile,
    grid: &SpatialGrid,
    h: f64,
) -> Result<()> {
    validate_periodic_phase(phase, grid.axis(0).extent(), h, "sigma")
}

/// Sample psi(x) = a(x) exp(i sigma(x)/h) on the grid and normalize.
///
/// Rejections: spacing must satisfy spacing <= h / (4 max|grad sigma| + 1)
/// so four grid points always cover a quarter oscillation; both phases must
/// wrap on the box; the sampled mass must neither clip (> 5e-2 defect) nor
/// touch the boundary cells (> 1e-8).
pub fn wkb_initialize(
    amplitude: &AmplitudeProfile,
    sigma: &PhaseProfile,
    h: f64,
    grid: &SpatialGrid,
) -> Result<WaveField> {
    if grid.dimension() != 1 {
        return Err(CoreError::invalid(
            "grid",
            "wave fields are one-dimensional in this laboratory",
        ));
    }
    if !grid.periodic() {
        return Err(CoreError::invalid("grid", "wave fields need a periodic grid"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(CoreError::invalid("h", "scale parameter must be positive and finite"));
    }
    if amplitude.dimension() != 1 {
        return Err(CoreError::invalid("amplitude", "amplitude profile must be one-dimensional"));
    }
    sigma.validate_dimension(1)?;

    let axis = grid.axis(0);
    // structural compatibility first: no refinement fixes a phase that
    // cannot wrap on the box
    validate_periodic_phase(sigma, axis.extent(), h, "sigma")?;
    validate_periodic_phase(amplitude.modulation(), axis.extent(), 1.0, "modulation")?;
    let radius = axis.min.abs().max(axis.max.abs());
    let max_grad = sigma.max_gradient(radius);
    let allowed = h / (4.0 * max_grad + 1.0);
    let spacing = axis.spacing();
    if spacing > allowed {
        let required = (axis.extent() / allowed).ceil() as usize;
        return Err(CoreError::UnderResolved {
            spacing,
            allowed,
            required_points: required.next_power_of_two().max(16),
        });
    }

    let xs = grid.coords(0);
    let values: Vec<C64> = xs
        .iter()
        .map(|&x| {
            let carrier = C64::from_polar(1.0, sigma.sigma1(x) / h);
            amplitude.value1(x) * carrier
        })
        .collect();
    let field = WaveField::normalized(values, grid.clone(), h, 0.0)?;
    let edge = field.boundary_mass();
    if edge > 1e-8 {
        return Err(CoreError::GridRejected {
            reason: format!("state carries mass {edge:.3e} in the boundary cells; enlarge the box"),
        });
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::DensityProfile;
    use approx::assert_abs_diff_eq;

    fn box_grid(n: usize) -> SpatialGrid {
        SpatialGrid::centered(1, 16.0, n, true).unwrap()
    }

    fn unit_amplitude() -> AmplitudeProfile {
        AmplitudeProfile::real(DensityProfile::standard(1).unwrap())
    }

    #[test]
    fn zero_phase_gives_a_real_unit_field() {
        let field = wkb_initialize(&unit_amplitude(), &PhaseProfile::Zero, 0.5, &box_grid(256))
            .unwrap();
        assert_abs_diff_eq!(field.norm(), 1.0, epsilon = 1e-12);
        for z in field.values() {
            assert_eq!(z.im, 0.0);
            assert!(z.re >= 0.0);
        }
    }

    #[test]
    fn norm_is_one_for_every_h() {
        let sigma = PhaseProfile::Sine {
            amplitude: 0.2,
            wavenumber: 2.0 * std::f64::consts::PI / 16.0,
            axis: 0,
        };
        for &h in &[1.0, 0.3, 0.05] {
            let field = wkb_initialize(&unit_amplitude(), &sigma, h, &box_grid(1024)).unwrap();
            assert_abs_diff_eq!(field.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_phase_centers_the_momentum_at_its_slope() {
        let grid = box_grid(512);
        let h = 0.25;
        let w = 16.0 * momentum_quantum(&grid, h);
        let sigma = PhaseProfile::Linear { slope: vec![w] };
        let field = wkb_initialize(&unit_amplitude(), &sigma, h, &grid).unwrap();
        assert_abs_diff_eq!(field.expect_momentum(), w, epsilon = 1e-9);
        let (vs, masses) = field.momentum_spectrum();
        let peak = masses
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_abs_diff_eq!(vs[peak], w, epsilon = 1e-12);
    }

    #[test]
    fn under_resolved_oscillation_is_rejected() {
        let grid = box_grid(64);
        let h = 0.01;
        let w = 40.0 * momentum_quantum(&grid, h);
        let sigma = PhaseProfile::Linear { slope: vec![w] };
        match wkb_initialize(&unit_amplitude(), &sigma, h, &grid) {
            Err(CoreError::UnderResolved { required_points, .. }) => {
                assert!(required_points > 64);
            }
            other => panic!("expected under-resolution, got {other:?}"),
        }
    }

    #[test]
    fn incompatible_phases_are_rejected() {
        let grid = box_grid(512);
        let h = 0.25;
        let w = 7.5 * momentum_quantum(&grid, h);
        assert!(matches!(
            wkb_initialize(
                &unit_amplitude(),
                &PhaseProfile::Linear { slope: vec![w] },
                h,
                &grid
            ),
            Err(CoreError::InvalidParameter { .. })
        ));
        assert!(matches!(
            wkb_initialize(
                &unit_amplitude(),
                &PhaseProfile::Quadratic { coeff: 0.5 },
                h,
                &grid
            ),
            Err(CoreError::InvalidParameter { .. })
        ));
        let open = SpatialGrid::centered(1, 16.0, 512, false).unwrap();
        assert!(wkb_initialize(&unit_amplitude(), &PhaseProfile::Zero, h, &open).is_err());
    }

    #[test]
    fn clipped_or_boundary_heavy_states_are_rejected() {
        let wide = AmplitudeProfile::real(DensityProfile::gaussian(&[0.0], &[4.0]).unwrap());
        assert!(matches!(
            wkb_initialize(&wide, &PhaseProfile::Zero, 0.5, &box_grid(256)),
            Err(CoreError::GridRejected { .. })
        ));
    }

    #[test]
    fn expectations_match_the_profile_moments() {
        let field =
            wkb_initialize(&unit_amplitude(), &PhaseProfile::Zero, 0.5, &box_grid(512)).unwrap();
        assert_abs_diff_eq!(field.expect_position(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(field.expect_position_sq(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(field.expect_momentum(), 0.0, epsilon = 1e-12);
        assert!(field.boundary_mass() < 1e-12);
        assert_abs_diff_eq!(field.l2_distance(&field).unwrap(), 0.0, epsilon = 1e-14);
    }
}
