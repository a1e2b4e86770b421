//! Phase-space test functions.
//!
//! Weak-topology errors are always reported as a maximum over this panel:
//! smooth, rapidly decaying observables F(x, v) with analytic gradients.
//! Each function records conservative sup-norm constants for itself and its
//! gradient; stability estimates and error budgets consume those constants,
//! so they must dominate the true suprema (verified by sampling in tests).

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

const INV_SQRT_E: f64 = 0.6065306597126334; // e^{-1/2}

/// Polynomial weight carried on top of the Gaussian envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// plain Gaussian bump
    One,
    /// x_axis (position coordinate)
    CoordX { axis: usize },
    /// v_axis (velocity coordinate)
    CoordV { axis: usize },
    /// |x|^2
    SquareX,
    /// |v|^2
    SquareV,
    /// x . v
    DotXV,
}

/// Separable Gaussian envelope exp(-|x-cx|^2/(2 sx^2) - |v-cv|^2/(2 sv^2)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub center_x: Vec<f64>,
    pub center_v: Vec<f64>,
    pub sx: f64,
    pub sv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    id: String,
    weight: WeightKind,
    env: Envelope,
    sup_value: f64,
    sup_gradient: f64,
}

impl TestFunction {
    pub fn new(id: impl Into<String>, weight: WeightKind, env: Envelope) -> Result<Self> {
        let d = env.center_x.len();
        if d == 0 || d > 3 || env.center_v.len() != d {
            return Err(CoreError::invalid(
                "envelope",
                "center vectors must share a dimension in 1..=3",
            ));
        }
        if !(env.sx > 0.0) || !(env.sv > 0.0) {
            return Err(CoreError::invalid("envelope", "widths must be positive"));
        }
        if let WeightKind::CoordX { axis } | WeightKind::CoordV { axis } = weight {
            if axis >= d {
                return Err(CoreError::invalid("weight", "coordinate axis out of range"));
            }
        }
        let (sup_value, sup_gradient) = bound_constants(&weight, &env);
        Ok(TestFunction {
            id: id.into(),
            weight,
            env,
            sup_value,
            sup_gradient,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dimension(&self) -> usize {
        self.env.center_x.len()
    }

    pub fn sup_value(&self) -> f64 {
        self.sup_value
    }

    pub fn sup_gradient(&self) -> f64 {
        self.sup_gradient
    }

    fn envelope(&self, x: &[f64], v: &[f64]) -> f64 {
        let mut ex = 0.0;
        let mut ev = 0.0;
        for a in 0..x.len() {
            let ux = x[a] - self.env.center_x[a];
            let uv = v[a] - self.env.center_v[a];
            ex += ux * ux;
            ev += uv * uv;
        }
        (-0.5 * ex / (self.env.sx * self.env.sx) - 0.5 * ev / (self.env.sv * self.env.sv)).exp()
    }

    fn weight_value(&self, x: &[f64], v: &[f64]) -> f64 {
        match self.weight {
            WeightKind::One => 1.0,
            WeightKind::CoordX { axis } => x[axis],
            WeightKind::CoordV { axis } => v[axis],
            WeightKind::SquareX => x.iter().map(|&c| c * c).sum(),
            WeightKind::SquareV => v.iter().map(|&c| c * c).sum(),
            WeightKind::DotXV => x.iter().zip(v).map(|(&a, &b)| a * b).sum(),
        }
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension());
        self.weight_value(x, v) * self.envelope(x, v)
    }

    /// Scalar fast path for d = 1.
    #[inline]
    pub fn eval1(&self, x: f64, v: f64) -> f64 {
        let ux = x - self.env.center_x[0];
        let uv = v - self.env.center_v[0];
        let g = (-0.5 * ux * ux / (self.env.sx * self.env.sx)
            - 0.5 * uv * uv / (self.env.sv * self.env.sv))
            .exp();
        let w = match self.weight {
            WeightKind::One => 1.0,
            WeightKind::CoordX { .. } => x,
            WeightKind::CoordV { .. } => v,
            WeightKind::SquareX => x * x,
            WeightKind::SquareV => v * v,
            WeightKind::DotXV => x * v,
        };
        w * g
    }

    /// One-dimensional product factorization: eval1(x, v) equals
    /// factor_x(x) * factor_v(v) for every weight/envelope combination.
    /// Phase-space quadratures use this to contract one axis at a time
    /// instead of evaluating the full tensor grid.
    #[inline]
    pub fn factor_x(&self, x: f64) -> f64 {
        let ux = x - self.env.center_x[0];
        let g = (-0.5 * ux * ux / (self.env.sx * self.env.sx)).exp();
        match self.weight {
            WeightKind::CoordX { .. } => x * g,
            WeightKind::SquareX => x * x * g,
            WeightKind::DotXV => x * g,
            _ => g,
        }
    }

    /// Velocity-side factor; see [`TestFunction::factor_x`].
    #[inline]
    pub fn factor_v(&self, v: f64) -> f64 {
        let uv = v - self.env.center_v[0];
        let g = (-0.5 * uv * uv / (self.env.sv * self.env.sv)).exp();
        match self.weight {
            WeightKind::CoordV { .. } => v * g,
            WeightKind::SquareV => v * v * g,
            WeightKind::DotXV => v * g,
            _ => g,
        }
    }

    /// Analytic position gradient.
    pub fn grad_x(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let g = self.envelope(x, v);
        let w = self.weight_value(x, v);
        let inv_sx2 = 1.0 / (self.env.sx * self.env.sx);
        for a in 0..x.len() {
            let dw = match self.weight {
                WeightKind::CoordX { axis } if axis == a => 1.0,
                WeightKind::SquareX => 2.0 * x[a],
                WeightKind::DotXV => v[a],
                _ => 0.0,
            };
            out[a] = (dw - w * (x[a] - self.env.center_x[a]) * inv_sx2) * g;
        }
    }

    /// Analytic velocity gradient.
    pub fn grad_v(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let g = self.envelope(x, v);
        let w = self.weight_value(x, v);
        let inv_sv2 = 1.0 / (self.env.sv * self.env.sv);
        for a in 0..v.len() {
            let dw = match self.weight {
                WeightKind::CoordV { axis } if axis == a => 1.0,
                WeightKind::SquareV => 2.0 * v[a],
                WeightKind::DotXV => x[a],
                _ => 0.0,
            };
            out[a] = (dw - w * (v[a] - self.env.center_v[a]) * inv_sv2) * g;
        }
    }
}

/// Conservative sup norms of w * G and grad(w * G). Built from per-factor
/// one-dimensional suprema of |u|^k exp(-u^2 / (2 s^2)); not tight, but
/// finite and dominating (tests sample-check the domination).
fn bound_constants(weight: &WeightKind, env: &Envelope) -> (f64, f64) {
    let norm = |c: &[f64]| c.iter().map(|&x| x * x).sum::<f64>().sqrt();
    let rx = norm(&env.center_x);
    let rv = norm(&env.center_v);
    let (sx, sv) = (env.sx, env.sv);
    let reach_x = rx + sx * INV_SQRT_E; // bounds |x| G_x^{factor}
    let reach_v = rv + sv * INV_SQRT_E;
    let sup_w = match weight {
        WeightKind::One => 1.0,
        WeightKind::CoordX { .. } => reach_x,
        WeightKind::CoordV { .. } => reach_v,
        WeightKind::SquareX => 2.0 * rx * rx + 4.0 * sx * sx / std::f64::consts::E,
        WeightKind::SquareV => 2.0 * rv * rv + 4.0 * sv * sv / std::f64::consts::E,
        WeightKind::DotXV => reach_x * reach_v,
    };
    let sup_dw = match weight {
        WeightKind::One => 0.0,
        WeightKind::CoordX { .. } | WeightKind::CoordV { .. } => 1.0,
        WeightKind::SquareX => 2.0 * (rx + sx * INV_SQRT_E * std::f64::consts::SQRT_2),
        WeightKind::SquareV => 2.0 * (rv + sv * INV_SQRT_E * std::f64::consts::SQRT_2),
        WeightKind::DotXV => reach_x + reach_v,
    };
    // |grad F| <= |grad w| G + |w| G (|x-cx|/sx^2 + |v-cv|/sv^2); bound the
    // second factor through split envelopes (widths inflate by sqrt(2)).
    let wide = Envelope {
        center_x: env.center_x.clone(),
        center_v: env.center_v.clone(),
        sx: sx * std::f64::consts::SQRT_2,
        sv: sv * std::f64::consts::SQRT_2,
    };
    let (sup_w_wide, _) = match weight {
        WeightKind::One => (1.0, 0.0),
        _ => {
            let reach_xw = rx + wide.sx * INV_SQRT_E;
            let reach_vw = rv + wide.sv * INV_SQRT_E;
            let s = match weight {
                WeightKind::CoordX { .. } => reach_xw,
                WeightKind::CoordV { .. } => reach_vw,
                WeightKind::SquareX => 2.0 * rx * rx + 4.0 * wide.sx * wide.sx / std::f64::consts::E,
                WeightKind::SquareV => 2.0 * rv * rv + 4.0 * wide.sv * wide.sv / std::f64::consts::E,
                WeightKind::DotXV => reach_xw * reach_vw,
                WeightKind::One => 1.0,
            };
            (s, 0.0)
        }
    };
    let envelope_pull =
        std::f64::consts::SQRT_2 * INV_SQRT_E * (1.0 / sx + 1.0 / sv) * 3.0f64.sqrt();
    let sup_grad = sup_dw + sup_w_wide * envelope_pull;
    (sup_w, sup_grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionPanel {
    functions: Vec<TestFunction>,
    dimension: usize,
}

impl TestFunctionPanel {
    pub fn new(functions: Vec<TestFunction>) -> Result<Self> {
        if functions.len() < 8 {
            return Err(CoreError::invalid(
                "functions",
                format!("panel needs at least 8 test functions, got {}", functions.len()),
            ));
        }
        let dimension = functions[0].dimension();
        if functions.iter().any(|f| f.dimension() != dimension) {
            return Err(CoreError::invalid("functions", "mixed dimensions in panel"));
        }
        let mut ids: Vec<&str> = functions.iter().map(|f| f.id()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != functions.len() {
            return Err(CoreError::invalid("functions", "duplicate test function ids"));
        }
        Ok(TestFunctionPanel { functions, dimension })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TestFunction> {
        self.functions.iter()
    }
}

/// The default panel: four plain Gaussian bumps at different centers and
/// widths plus five polynomial-weighted Gaussians. Nine functions, so panel
/// maxima are not dominated by any single observable family.
pub fn default_test_panel(dimension: usize) -> Result<TestFunctionPanel> {
    let zeros = vec![0.0; dimension];
    let mut offset_x = zeros.clone();
    offset_x[0] = 1.0;
    let mut offset_v = zeros.clone();
    offset_v[0] = -0.5;
    let env = |cx: &Vec<f64>, cv: &Vec<f64>, sx: f64, sv: f64| Envelope {
        center_x: cx.clone(),
        center_v: cv.clone(),
        sx,
        sv,
    };
    let inv_sqrt2 = 1.0 / std::f64::consts::SQRT_2;
    let fns = vec![
        TestFunction::new(
            "unit_gauss",
            WeightKind::One,
            env(&zeros, &zeros, inv_sqrt2, inv_sqrt2),
        )?,
        TestFunction::new("wide_gauss", WeightKind::One, env(&zeros, &zeros, 2.0, 2.0))?,
        TestFunction::new(
            "offset_x_gauss",
            WeightKind::One,
            env(&offset_x, &zeros, 1.2, 1.5),
        )?,
        TestFunction::new(
            "offset_v_gauss",
            WeightKind::One,
            env(&zeros, &offset_v, 1.5, 1.0),
        )?,
        TestFunction::new(
            "x1_weighted",
            WeightKind::CoordX { axis: 0 },
            env(&zeros, &zeros, 1.8, 1.8),
        )?,
        TestFunction::new(
            "v1_weighted",
            WeightKind::CoordV { axis: 0 },
            env(&zeros, &zeros, 1.8, 1.8),
        )?,
        // x^2 grows against the envelope tail; keep sx tight enough that
        // truncating the weight at the edge of a finite sample lattice
        // decays faster than the rates the convergence studies measure
        TestFunction::new("x_sq_weighted", WeightKind::SquareX, env(&zeros, &zeros, 1.4, 2.2))?,
        TestFunction::new("v_sq_weighted", WeightKind::SquareV, env(&zeros, &zeros, 2.2, 2.2))?,
        TestFunction::new("xv_weighted", WeightKind::DotXV, env(&zeros, &zeros, 2.0, 2.0))?,
    ];
    TestFunctionPanel::new(fns)
}
