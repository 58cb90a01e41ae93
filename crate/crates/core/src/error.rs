use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The optical frequency sits too close to a D1 hyperfine line for the
    /// perturbative polarizability to hold.
    #[error(
        "optical frequency within {linewidths:.1} linewidths of the F={f} -> F'={f_prime} line (minimum 100)"
    )]
    NearResonance {
        f: u32,
        f_prime: u32,
        linewidths: f64,
    },

    #[error("detuning {detuning:.6e} rad/us is within 100 linewidths of zero")]
    DivisionNearZero { detuning: f64 },

    #[error("retrieval efficiency never drops below 1/e before t = {t_max} us")]
    LifetimeNotReached { t_max: f64 },

    #[error("requested field {requested_mg:.4} mG exceeds the {max_mg:.4} mG reachable at the intensity cap")]
    FieldOutOfRange { requested_mg: f64, max_mg: f64 },

    #[error("no non-negative intensity profile below the cap realizes the requested field: {0}")]
    NonPhysicalProfile(String),

    #[error("target intensity exceeds the zero-order intensity at z' = {z_prime:.4}")]
    TargetInfeasible { z_prime: f64 },

    #[error("grid mismatch: mask has {mask} samples, incident beam has {incident}")]
    GridMismatch { mask: usize, incident: usize },

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for errors raised by the optimisation/synthesis layer rather than
    /// the physics model itself.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::FieldOutOfRange { .. }
                | Error::NonPhysicalProfile(_)
                | Error::TargetInfeasible { .. }
        )
    }
}
