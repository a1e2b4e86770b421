//! Initial-data profiles shared by the particle, fluid, and wave solvers.
//!
//! A monokinetic state is a pair (rho0, grad sigma0); the wave solvers build
//! sqrt(rho0) exp(i sigma0 / h) from the same two profiles, so every limit
//! comparison starts from literally identical data.

use crate::error::{CoreError, Result};
use crate::fft::C64;
use crate::stats::{gauss_legendre_on, inverse_normal_cdf};
use serde::{Deserialize, Serialize};

/// Product of one-dimensional normal densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl DensityProfile {
    pub fn gaussian(means: &[f64], stds: &[f64]) -> Result<Self> {
        let d = means.len();
        if d == 0 || d > 3 || stds.len() != d {
            return Err(CoreError::invalid(
                "density",
                "means and stds must share a dimension in 1..=3",
            ));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(CoreError::invalid("density", "means must be finite"));
        }
        if stds.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(CoreError::invalid("density", "stds must be positive and finite"));
        }
        let profile = DensityProfile {
            means: means.to_vec(),
            stds: stds.to_vec(),
        };
        // Mass self-check by quadrature; the product form reduces it to the
        // per-axis marginals.
        let defect = profile.normalization_defect();
        if defect > 1e-8 {
            return Err(CoreError::NotNormalized {
                what: "density profile".into(),
                defect,
                tol: 1e-8,
            });
        }
        Ok(profile)
    }

    pub fn standard(dimension: usize) -> Result<Self> {
        Self::gaussian(&vec![0.0; dimension], &vec![1.0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.means.len()
    }

    pub fn mean(&self, axis: usize) -> f64 {
        self.means[axis]
    }

    pub fn std(&self, axis: usize) -> f64 {
        self.stds[axis]
    }

    /// |integral of rho - 1| measured with Gauss-Legendre quadrature out to
    /// nine standard deviations on every axis.
    pub fn normalization_defect(&self) -> f64 {
        let mut mass = 1.0;
        for a in 0..self.dimension() {
            let (xs, ws) = gauss_legendre_on(
                self.means[a] - 9.0 * self.stds[a],
                self.means[a] + 9.0 * self.stds[a],
                80,
            );
            let marginal: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(&x, &w)| w * self.axis_density(a, x))
                .sum();
            mass *= marginal;
        }
        (mass - 1.0).abs()
    }

    #[inline]
    fn axis_density(&self, axis: usize, x: f64) -> f64 {
        let u = (x - self.means[axis]) / self.stds[axis];
        (-0.5 * u * u).exp() / (self.stds[axis] * (2.0 * std::f64::consts::PI).sqrt())
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension());
        (0..x.len()).map(|a| self.axis_density(a, x[a])).product()
    }

    pub fn sqrt_density(&self, x: &[f64]) -> f64 {
        self.density(x).sqrt()
    }

    /// Inverse of the axis marginal CDF; the deterministic particle loader
    /// places its lattice at these points.
    pub fn quantile(&self, axis: usize, p: f64) -> Result<f64> {
        if axis >= self.dimension() {
            return Err(CoreError::invalid("axis", "quantile axis out of range"));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(CoreError::invalid("p", "quantile argument must lie in (0,1)"));
        }
        Ok(self.means[axis] + self.stds[axis] * inverse_normal_cdf(p))
    }
}

/// Initial phase sigma0. The fluid velocity is its gradient and the wave
/// phase is sigma0 / h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseProfile {
    Zero,
    /// sigma = slope . x
    Linear { slope: Vec<f64> },
    /// sigma = coeff |x|^2 / 2; negative coeff focuses and forms a caustic
    Quadratic { coeff: f64 },
    /// sigma = amplitude sin(wavenumber * x_axis)
    Sine {
        amplitude: f64,
        wavenumber: f64,
        axis: usize,
    },
}

impl PhaseProfile {
    pub fn validate_dimension(&self, dimension: usize) -> Result<()> {
        match self {
            PhaseProfile::Linear { slope } if slope.len() != dimension => Err(
                CoreError::invalid("slope", "linear phase slope length must match dimension"),
            ),
            PhaseProfile::Sine { axis, .. } if *axis >= dimension => {
                Err(CoreError::invalid("axis", "sine phase axis out of range"))
            }
            PhaseProfile::Sine { wavenumber, .. } if !(wavenumber.abs() > 0.0) => {
                Err(CoreError::invalid("wavenumber", "sine phase needs a nonzero wavenumber"))
            }
            _ => Ok(()),
        }
    }

    pub fn sigma(&self, x: &[f64]) -> f64 {
        match self {
            PhaseProfile::Zero => 0.0,
            PhaseProfile::Linear { slope } => slope.iter().zip(x).map(|(&s, &c)| s * c).sum(),
            PhaseProfile::Quadratic { coeff } => {
                0.5 * coeff * x.iter().map(|&c| c * c).sum::<f64>()
            }
            PhaseProfile::Sine {
                amplitude,
                wavenumber,
                axis,
            } => amplitude * (wavenumber * x[*axis]).sin(),
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            PhaseProfile::Zero => out.fill(0.0),
            PhaseProfile::Linear { slope } => out.copy_from_slice(slope),
            PhaseProfile::Quadratic { coeff } => {
                for (o, &c) in out.iter_mut().zip(x) {
                    *o = coeff * c;
                }
            }
            PhaseProfile::Sine {
                amplitude,
                wavenumber,
                axis,
            } => {
                out.fill(0.0);
                out[*axis] = amplitude * wavenumber * (wavenumber * x[*axis]).cos();
            }
        }
    }

    /// Row-major d x d second-derivative matrix.
    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        debug_assert_eq!(out.len(), d * d);
        out.fill(0.0);
        match self {
            PhaseProfile::Zero | PhaseProfile::Linear { .. } => {}
            PhaseProfile::Quadratic { coeff } => {
                for a in 0..d {
                    out[a * d + a] = *coeff;
                }
            }
            PhaseProfile::Sine {
                amplitude,
                wavenumber,
                axis,
            } => {
                out[axis * d + axis] =
                    -amplitude * wavenumber * wavenumber * (wavenumber * x[*axis]).sin();
            }
        }
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        match self {
            PhaseProfile::Zero | PhaseProfile::Linear { .. } => 0.0,
            PhaseProfile::Quadratic { coeff } => coeff * x.len() as f64,
            PhaseProfile::Sine {
                amplitude,
                wavenumber,
                axis,
            } => -amplitude * wavenumber * wavenumber * (wavenumber * x[*axis]).sin(),
        }
    }

    /// Supremum of |grad sigma| over the ball |x| <= radius; wave grids are
    /// sized against this.
    pub fn max_gradient(&self, radius: f64) -> f64 {
        match self {
            PhaseProfile::Zero => 0.0,
            PhaseProfile::Linear { slope } => {
                slope.iter().map(|&s| s * s).sum::<f64>().sqrt()
            }
            PhaseProfile::Quadratic { coeff } => coeff.abs() * radius,
            PhaseProfile::Sine {
                amplitude,
                wavenumber,
                ..
            } => (amplitude * wavenumber).abs(),
        }
    }

    #[inline]
    pub fn sigma1(&self, x: f64) -> f64 {
        self.sigma(std::slice::from_ref(&x))
    }

    #[inline]
    pub fn grad1(&self, x: f64) -> f64 {
        match self {
            PhaseProfile::Zero => 0.0,
            PhaseProfile::Linear { slope } => slope[0],
            PhaseProfile::Quadratic { coeff } => coeff * x,
            PhaseProfile::Sine {
                amplitude,
                wavenumber,
                ..
            } => amplitude * wavenumber * (wavenumber * x).cos(),
        }
    }
}

/// Complex wave amplitude a0 = sqrt(rho0) exp(i theta). The modulation theta
/// rides in the amplitude, not in the h-scaled phase, so it survives the
/// h -> 0 limit as an order-one internal structure. A zero modulation gives
/// a real nonnegative amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeProfile {
    density: DensityProfile,
    modulation: PhaseProfile,
}

impl AmplitudeProfile {
    pub fn new(density: DensityProfile, modulation: PhaseProfile) -> Result<Self> {
        modulation.validate_dimension(density.dimension())?;
        Ok(AmplitudeProfile { density, modulation })
    }

    pub fn real(density: DensityProfile) -> Self {
        AmplitudeProfile {
            density,
            modulation: PhaseProfile::Zero,
        }
    }

    pub fn dimension(&self) -> usize {
        self.density.dimension()
    }

    pub fn density_profile(&self) -> &DensityProfile {
        &self.density
    }

    pub fn modulation(&self) -> &PhaseProfile {
        &self.modulation
    }

    pub fn is_real(&self) -> bool {
        matches!(self.modulation, PhaseProfile::Zero)
    }

    pub fn value(&self, x: &[f64]) -> C64 {
        let g = self.density.sqrt_density(x);
        let theta = self.modulation.sigma(x);
        C64::from_polar(g, theta)
    }

    #[inline]
    pub fn value1(&self, x: f64) -> C64 {
        self.value(std::slice::from_ref(&x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_density_normalizes_and_evaluates() {
        let rho = DensityProfile::gaussian(&[0.5, -1.0], &[1.0, 2.0]).unwrap();
        assert!(rho.normalization_defect() < 1e-12);
        // peak value of the product of two normal pdfs
        let peak = 1.0 / (2.0 * std::f64::consts::PI * 1.0 * 2.0);
        assert_abs_diff_eq!(rho.density(&[0.5, -1.0]), peak, epsilon = 1e-15);
        assert_abs_diff_eq!(
            rho.sqrt_density(&[0.5, -1.0]),
            peak.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn quantiles_invert_the_marginal() {
        let rho = DensityProfile::gaussian(&[2.0], &[0.5]).unwrap();
        assert_abs_diff_eq!(rho.quantile(0, 0.5).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            rho.quantile(0, 0.975).unwrap(),
            2.0 + 0.5 * 1.959963984540054,
            epsilon = 1e-12
        );
        assert!(rho.quantile(0, 0.0).is_err());
        assert!(rho.quantile(1, 0.5).is_err());
    }

    #[test]
    fn density_rejects_bad_parameters() {
        assert!(DensityProfile::gaussian(&[0.0], &[0.0]).is_err());
        assert!(DensityProfile::gaussian(&[0.0], &[-1.0]).is_err());
        assert!(DensityProfile::gaussian(&[0.0, 0.0], &[1.0]).is_err());
        assert!(DensityProfile::gaussian(&[f64::NAN], &[1.0]).is_err());
        assert!(DensityProfile::gaussian(&[], &[]).is_err());
    }

    #[test]
    fn phase_derivatives_match_finite_differences() {
        let profiles: Vec<PhaseProfile> = vec![
            PhaseProfile::Zero,
            PhaseProfile::Linear { slope: vec![0.7, -0.3] },
            PhaseProfile::Quadratic { coeff: -0.5 },
            PhaseProfile::Sine {
                amplitude: 0.2,
                wavenumber: 1.5,
                axis: 1,
            },
        ];
        let x = [0.4, -0.9];
        let step = 1e-5;
        for p in &profiles {
            p.validate_dimension(2).unwrap();
            let mut g = [0.0; 2];
            p.gradient(&x, &mut g);
            let mut hess = [0.0; 4];
            p.hessian(&x, &mut hess);
            for a in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[a] += step;
                xm[a] -= step;
                let fd = (p.sigma(&xp) - p.sigma(&xm)) / (2.0 * step);
                assert!((g[a] - fd).abs() < 1e-8, "{p:?} gradient axis {a}");
                let mut gp = [0.0; 2];
                let mut gm = [0.0; 2];
                p.gradient(&xp, &mut gp);
                p.gradient(&xm, &mut gm);
                for b in 0..2 {
                    let fd2 = (gp[b] - gm[b]) / (2.0 * step);
                    assert!(
                        (hess[b * 2 + a] - fd2).abs() < 1e-8,
                        "{p:?} hessian ({b},{a})"
                    );
                }
            }
            let trace = hess[0] + hess[3];
            assert_abs_diff_eq!(p.laplacian(&x), trace, epsilon = 1e-14);
        }
    }

    #[test]
    fn max_gradient_dominates_samples() {
        let p = PhaseProfile::Sine {
            amplitude: 0.2,
            wavenumber: 3.0,
            axis: 0,
        };
        let bound = p.max_gradient(4.0);
        assert_abs_diff_eq!(bound, 0.6, epsilon = 1e-15);
        for i in 0..200 {
            let x = -4.0 + 8.0 * i as f64 / 199.0;
            assert!(p.grad1(x).abs() <= bound + 1e-15);
        }
        let q = PhaseProfile::Quadratic { coeff: -0.5 };
        assert_abs_diff_eq!(q.max_gradient(4.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.grad1(3.0), -1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q.sigma1(2.0), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn phase_validation_catches_mismatches() {
        let p = PhaseProfile::Linear { slope: vec![1.0] };
        assert!(p.validate_dimension(2).is_err());
        let s = PhaseProfile::Sine {
            amplitude: 1.0,
            wavenumber: 2.0,
            axis: 1,
        };
        assert!(s.validate_dimension(1).is_err());
        let z = PhaseProfile::Sine {
            amplitude: 1.0,
            wavenumber: 0.0,
            axis: 0,
        };
        assert!(z.validate_dimension(1).is_err());
    }

    #[test]
    fn amplitude_carries_density_and_modulation() {
        let rho = DensityProfile::standard(1).unwrap();
        let real = AmplitudeProfile::real(rho.clone());
        assert!(real.is_real());
        let v = real.value(&[0.3]);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-300);
        assert_abs_diff_eq!(v.re, rho.sqrt_density(&[0.3]), epsilon = 1e-15);

        let modulated = AmplitudeProfile::new(
            rho.clone(),
            PhaseProfile::Sine {
                amplitude: 0.4,
                wavenumber: 1.0,
                axis: 0,
            },
        )
        .unwrap();
        assert!(!modulated.is_real());
        let w = modulated.value1(0.3);
        // |a|^2 still equals the density regardless of modulation
        assert_abs_diff_eq!(w.norm_sqr(), rho.density(&[0.3]), epsilon = 1e-15);
        let expected_phase = 0.4 * 0.3f64.sin();
        assert_abs_diff_eq!(w.arg(), expected_phase, epsilon = 1e-15);

        // modulation must fit the dimension
        assert!(AmplitudeProfile::new(
            DensityProfile::standard(1).unwrap(),
            PhaseProfile::Linear { slope: vec![1.0, 2.0] },
        )
        .is_err());
    }
}
