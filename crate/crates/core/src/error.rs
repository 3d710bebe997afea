use thiserror::Error;

use crate::perturbation::OracleCoefficients;

pub type Result<T> = std::result::Result<T, EitError>;

#[derive(Debug, Error)]
pub enum EitError {
    #[error("steady-state system is singular or ill-conditioned (condition estimate {condition:.3e}); a nonzero ground-state dephasing regularizes dark states")]
    DegenerateSteadyState { condition: f64 },

    #[error("pole at resonance: {which} vanishes ({detail})")]
    PoleAtResonance { which: &'static str, detail: String },

    #[error("the third-order coefficients divide by the pump rate; Γ31 must be positive")]
    PumpRequired,

    #[error(
        "closed-form second-order coefficients disagree with the linear-solve oracle under both X3 readings \
         (relative discrepancy {discrepancy:?}); the oracle values are authoritative"
    )]
    AmbiguousClosedForm {
        discrepancy: [f64; 2],
        oracle: Box<OracleCoefficients>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("potential is not π-periodic: {0}")]
    PeriodMismatch(String),

    #[error("no gain-balance point for {knob} in [{lo:.6e}, {hi:.6e}]: balance {f_lo:.6e} .. {f_hi:.6e}")]
    NoBalancePoint {
        knob: String,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("no PT-breaking threshold up to W = {w_max} (max |Im β| = {max_im:.3e})")]
    NoThresholdFound { w_max: f64, max_im: f64 },

    #[error("non-finite field encountered at step {step}")]
    NonFinite { step: usize },

    #[error("steady state failed at ξ = {xi}, s = {s}: {source}")]
    SteadyStateAt {
        xi: f64,
        s: f64,
        #[source]
        source: Box<EitError>,
    },

    #[error("unknown preset '{0}' (built-in: fig2, design)")]
    UnknownPreset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EitError {
    /// Errors that come from the physics (a violated precondition of the model)
    /// rather than from malformed input.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            EitError::DegenerateSteadyState { .. }
                | EitError::PoleAtResonance { .. }
                | EitError::PumpRequired
                | EitError::AmbiguousClosedForm { .. }
                | EitError::NoBalancePoint { .. }
                | EitError::NoThresholdFound { .. }
                | EitError::NonFinite { .. }
                | EitError::SteadyStateAt { .. }
        )
    }
}
