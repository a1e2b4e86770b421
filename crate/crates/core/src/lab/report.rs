//! Report types shared by all ladder experiments.

use crate::lab::fit::SlopeFit;
use serde::{Deserialize, Serialize};

/// One measured weak error, traceable to exactly where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    /// Ladder parameter the run used (particle count or dispersion scale).
    pub parameter: f64,
    /// Identifier of the test function the pairing was taken against.
    pub test_function: String,
    /// Time of the pairing.
    pub time: f64,
    /// Absolute difference to the reference pairing.
    pub error: f64,
}

/// Provenance and trust level of the reference the errors were measured
/// against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    /// How the reference was computed: solver, resolution, step.
    pub provenance: String,
    /// Largest pairing shift observed when the reference was refined
    /// (resolution doubled, step halved).
    pub self_convergence: f64,
    /// Budget the shift was checked against: a tenth of the smallest ladder
    /// error. A reference that moves more than this cannot resolve the
    /// ladder and the report is marked invalid.
    pub budget: f64,
    /// Whether the self-convergence gate passed.
    pub trusted: bool,
}

impl ReferenceInfo {
    /// Gate the reference against the smallest ladder error.
    pub fn gated(provenance: String, self_convergence: f64, smallest_error: f64) -> Self {
        let budget = 0.1 * smallest_error;
        ReferenceInfo { provenance, self_convergence, budget, trusted: self_convergence < budget }
    }
}

/// Outcome of one ladder experiment.
///
/// Wall-clock time is kept out of the serialized form so that identical
/// configurations produce byte-identical artifacts; timing lives in the run
/// manifest instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Which experiment produced this report.
    pub experiment: String,
    /// Parameter ladder in the order it was swept.
    pub ladder: Vec<f64>,
    /// Full error table: one row per parameter, test function, and time.
    pub samples: Vec<ErrorSample>,
    /// Max-over-panel error per ladder parameter; the series the fit uses.
    pub ladder_errors: Vec<(f64, f64)>,
    /// Log-log fit of `ladder_errors`, absent when legitimately skipped
    /// (for instance a free-streaming ladder sitting at the quadrature
    /// floor).
    pub fit: Option<SlopeFit>,
    /// Which regime the run measured (quadrature, monte-carlo, ...).
    pub regime: String,
    pub reference: ReferenceInfo,
    /// Human-readable annotations: skipped fits, floors applied, extras.
    pub notes: Vec<String>,
    /// Named scalar results beyond the fit: per-seed slopes, envelope
    /// constants, measured fold times.
    pub extras: Vec<(String, f64)>,
    /// Full configuration as canonical JSON, sufficient to re-run.
    pub config_json: String,
    /// FNV-1a hash of `config_json`, hex encoded.
    pub config_hash: String,
    /// True when the reference gate and every internal consistency check
    /// passed.
    pub valid: bool,
    #[serde(skip)]
    pub wall_clock: f64,
}

impl ExperimentReport {
    /// Empty report shell carrying the configuration fingerprint.
    pub fn shell<T: Serialize>(experiment: &str, config: &T) -> Self {
        let config_json = serde_json::to_string(config)
            .expect("experiment configurations serialize infallibly");
        let config_hash = fnv1a_hex(config_json.as_bytes());
        ExperimentReport {
            experiment: experiment.to_string(),
            ladder: Vec::new(),
            samples: Vec::new(),
            ladder_errors: Vec::new(),
            fit: None,
            regime: String::new(),
            reference: ReferenceInfo {
                provenance: String::new(),
                self_convergence: 0.0,
                budget: 0.0,
                trusted: false,
            },
            notes: Vec::new(),
            extras: Vec::new(),
            config_json,
            config_hash,
            valid: false,
            wall_clock: 0.0,
        }
    }

    /// Smallest max-over-panel ladder error.
    pub fn smallest_error(&self) -> f64 {
        self.ladder_errors.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min)
    }

    /// Largest per-rung ratio error / budget(parameter) for a bound check
    /// e <= C * budget; returns the per-rung constants.
    pub fn envelope_constants(&self, budget: impl Fn(f64) -> f64) -> Vec<f64> {
        self.ladder_errors.iter().map(|&(p, e)| e / budget(p)).collect()
    }
}

/// 64-bit FNV-1a, hex encoded. Configuration fingerprints only; output
/// files get cryptographic checksums at the command-line layer.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}
