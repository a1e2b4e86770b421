//! Two-body interaction potentials.
//!
//! Every shipped kind is even and analytic, so pair forces cancel in
//! opposite pairs (exact momentum conservation for equal weights) and
//! gradient/Hessian evaluators are closed-form rather than differenced.
//! Sup-norm bounds for the value, gradient, and Hessian are recorded at
//! construction; the mean-field stability estimates consume them.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// Identically zero; free streaming.
    Zero,
    /// amplitude * exp(-|x|^2 / (2 width^2)). Bounded with all derivatives.
    Gaussian { amplitude: f64, width: f64 },
    /// spring * |x|^2 / 2. Unbounded test helper with closed-form N = 2 orbits.
    Harmonic { spring: f64 },
}

/// Recorded sup-norm bounds; infinite entries mark kinds that violate the
/// bounded-interaction hypotheses and are only meant for closed-form tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBounds {
    pub sup_value: f64,
    pub sup_gradient: f64,
    pub sup_hessian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothnessClass {
    /// Analytic with globally bounded derivatives of every order.
    BoundedAnalytic,
    /// Analytic, but the gradient grows at infinity.
    UnboundedAnalytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyPotential {
    kind: PotentialKind,
    dimension: usize,
    bounds: DerivativeBounds,
    smoothness: SmoothnessClass,
}

impl TwoBodyPotential {
    /// Gaussian bump potential. The recorded bounds are the analytic suprema:
    /// |phi| <= |A|, |grad phi| <= |A| e^{-1/2} / w (attained at |x| = w),
    /// and the Hessian operator norm is bounded by |A| / w^2 (attained at 0).
    pub fn gaussian(amplitude: f64, width: f64, dimension: usize) -> Result<Self> {
        check_dimension(dimension)?;
        if !(width > 0.0) || !width.is_finite() {
            return Err(CoreError::invalid("width", "must be finite and positive"));
        }
        if !amplitude.is_finite() {
            return Err(CoreError::invalid("amplitude", "must be finite"));
        }
        let a = amplitude.abs();
        Ok(TwoBodyPotential {
            kind: PotentialKind::Gaussian { amplitude, width },
            dimension,
            bounds: DerivativeBounds {
                sup_value: a,
                sup_gradient: a * (-0.5f64).exp() / width,
                sup_hessian: a / (width * width),
            },
            smoothness: SmoothnessClass::BoundedAnalytic,
        })
    }

    pub fn harmonic(spring: f64, dimension: usize) -> Result<Self> {
        check_dimension(dimension)?;
        if !spring.is_finite() {
            return Err(CoreError::invalid("spring", "must be finite"));
        }
        Ok(TwoBodyPotential {
            kind: PotentialKind::Harmonic { spring },
            dimension,
            bounds: DerivativeBounds {
                sup_value: f64::INFINITY,
                sup_gradient: f64::INFINITY,
                sup_hessian: spring.abs(),
            },
            smoothness: SmoothnessClass::UnboundedAnalytic,
        })
    }

    pub fn zero(dimension: usize) -> Result<Self> {
        check_dimension(dimension)?;
        Ok(TwoBodyPotential {
            kind: PotentialKind::Zero,
            dimension,
            bounds: DerivativeBounds {
                sup_value: 0.0,
                sup_gradient: 0.0,
                sup_hessian: 0.0,
            },
            smoothness: SmoothnessClass::BoundedAnalytic,
        })
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bounds(&self) -> DerivativeBounds {
        self.bounds
    }

    pub fn smoothness(&self) -> SmoothnessClass {
        self.smoothness
    }

    /// Decay scale of the interaction kernel, if it has one. Convolution
    /// solvers refuse kernels without a finite range.
    pub fn range(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Zero => Some(0.0),
            PotentialKind::Gaussian { width, .. } => Some(width),
            PotentialKind::Harmonic { .. } => None,
        }
    }

    pub fn value(&self, dx: &[f64]) -> f64 {
        debug_assert_eq!(dx.len(), self.dimension);
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Gaussian { amplitude, width } => {
                let r2: f64 = dx.iter().map(|&c| c * c).sum();
                amplitude * (-0.5 * r2 / (width * width)).exp()
            }
            PotentialKind::Harmonic { spring } => {
                let r2: f64 = dx.iter().map(|&c| c * c).sum();
                0.5 * spring * r2
            }
        }
    }

    /// Analytic gradient, written into `out`.
    pub fn gradient(&self, dx: &[f64], out: &mut [f64]) {
        debug_assert_eq!(dx.len(), self.dimension);
        debug_assert_eq!(out.len(), self.dimension);
        match self.kind {
            PotentialKind::Zero => out.fill(0.0),
            PotentialKind::Gaussian { amplitude, width } => {
                let inv_w2 = 1.0 / (width * width);
                let r2: f64 = dx.iter().map(|&c| c * c).sum();
                let g = amplitude * (-0.5 * r2 * inv_w2).exp() * inv_w2;
                for (o, &c) in out.iter_mut().zip(dx) {
                    *o = -g * c;
                }
            }
            PotentialKind::Harmonic { spring } => {
                for (o, &c) in out.iter_mut().zip(dx) {
                    *o = spring * c;
                }
            }
        }
    }

    /// Gradient specialization for d = 1 (hot pair loop).
    #[inline]
    pub fn gradient_1d(&self, dx: f64) -> f64 {
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Gaussian { amplitude, width } => {
                let inv_w2 = 1.0 / (width * width);
                -amplitude * (-0.5 * dx * dx * inv_w2).exp() * inv_w2 * dx
            }
            PotentialKind::Harmonic { spring } => spring * dx,
        }
    }

    /// Analytic Hessian, row-major d x d in `out`.
    pub fn hessian(&self, dx: &[f64], out: &mut [f64]) {
        let d = self.dimension;
        debug_assert_eq!(dx.len(), d);
        debug_assert_eq!(out.len(), d * d);
        match self.kind {
            PotentialKind::Zero => out.fill(0.0),
            PotentialKind::Gaussian { amplitude, width } => {
                let inv_w2 = 1.0 / (width * width);
                let r2: f64 = dx.iter().map(|&c| c * c).sum();
                let g = amplitude * (-0.5 * r2 * inv_w2).exp();
                for a in 0..d {
                    for b in 0..d {
                        let mut v = g * dx[a] * dx[b] * inv_w2 * inv_w2;
                        if a == b {
                            v -= g * inv_w2;
                        }
                        out[a * d + b] = v;
                    }
                }
            }
            PotentialKind::Harmonic { spring } => {
                out.fill(0.0);
                for a in 0..d {
                    out[a * d + a] = spring;
                }
            }
        }
    }

    #[inline]
    pub fn hessian_1d(&self, dx: f64) -> f64 {
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Gaussian { amplitude, width } => {
                let inv_w2 = 1.0 / (width * width);
                amplitude * (-0.5 * dx * dx * inv_w2).exp() * (dx * dx * inv_w2 - 1.0) * inv_w2
            }
            PotentialKind::Harmonic { spring } => spring,
        }
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(CoreError::invalid(
            "dimension",
            format!("must be 1, 2, or 3, got {d}"),
        ))
    }
}

/// Weak-coupling scaling bookkeeping: a long-range pair interaction
/// (1/lambda) phi(x/lambda) observed in macroscopic coordinates q = x/lambda
/// becomes the mean-field coupling (1/N) phi(q_i - q_j) at lambda = N, and
/// the kinetic term acquires the effective Planck constant hbar / lambda.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KacScaling {
    lambda: f64,
    hbar: f64,
}

impl KacScaling {
    pub fn new(lambda: f64, hbar: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(CoreError::invalid("lambda", "must be finite and positive"));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(CoreError::invalid("hbar", "must be finite and positive"));
        }
        Ok(KacScaling { lambda, hbar })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Effective Planck constant hbar / lambda. Derived on demand so the
    /// identity effective_h * lambda = hbar holds by construction.
    pub fn effective_h(&self) -> f64 {
        self.hbar / self.lambda
    }
}

/// Express the scaled problem in macroscopic coordinates. The pair potential
/// is unchanged as a function of the macroscopic separation; all the scaling
/// moves into the 1/N coupling and the effective Planck constant.
pub fn kac_rescale(
    potential: &TwoBodyPotential,
    lambda: f64,
    hbar: f64,
) -> Result<(TwoBodyPotential, KacScaling)> {
    let scaling = KacScaling::new(lambda, hbar)?;
    Ok((*potential, scaling))
}
