use thiserror::Error;

/// Errors shared by every solver layer.
///
/// Variants are structured so callers can distinguish configuration mistakes
/// (rejected before any stepping) from runtime aborts (caustics, divergence,
/// resolution loss) without parsing message strings.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// A constructor or operation was handed an argument outside its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Grid geometry unusable for the requested operation.
    #[error("grid rejected: {reason}")]
    GridRejected { reason: String },

    /// A wave grid cannot represent the requested oscillation scale.
    /// `required_points` is the smallest per-axis point count that would.
    #[error(
        "under-resolved wave grid: spacing {spacing:.3e} exceeds allowed {allowed:.3e} \
         (need at least {required_points} points per axis)"
    )]
    UnderResolved {
        spacing: f64,
        allowed: f64,
        required_points: usize,
    },

    /// Momentum content too close to the velocity-grid edge; results would alias.
    #[error("momentum aliasing: mass {edge_mass:.3e} within {bins} bins of the velocity edge")]
    Aliasing { edge_mass: f64, bins: usize },

    /// A density, amplitude, or family failed its normalization contract.
    #[error("normalization defect {defect:.3e} exceeds tolerance {tol:.3e} for {what}")]
    NotNormalized { what: String, defect: f64, tol: f64 },

    /// A particle or marker left the deposition domain.
    #[error("marker {index} left the grid domain at t = {time:.6}")]
    MarkerLeftDomain { index: usize, time: f64 },

    /// Non-finite state detected during time stepping.
    #[error("non-finite state detected at t = {time:.6} ({detail})")]
    Diverged { time: f64, detail: String },

    /// The transported Jacobian collapsed: the monokinetic description has
    /// reached a caustic and the run was aborted.
    #[error(
        "caustic abort at t = {time:.6}: min Jacobian {min_jacobian:.3e}, \
         estimated caustic time {estimated_caustic_time:.6}"
    )]
    CausticAbort {
        time: f64,
        min_jacobian: f64,
        estimated_caustic_time: f64,
    },

    /// Explicit time step outside the stability region of the stepper.
    #[error("time step {dt:.3e} exceeds stable limit {limit:.3e} for {scheme}")]
    StepTooLarge { dt: f64, limit: f64, scheme: String },

    /// Slope fitting was impossible with the data provided.
    #[error("slope fit rejected: {reason}")]
    FitRejected { reason: String },
}

impl CoreError {
    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
