//! Light-induced fictitious magnetic fields for cold-atom quantum memories.
//!
//! The crate is organised bottom-up:
//!
//! * [`atomic`] physical constants and the ⁸⁵Rb D1 hyperfine structure,
//! * [`angular`] Wigner 3j/6j symbols and hyperfine reduced dipole elements,
//! * [`stark`] dynamic polarizabilities, AC Stark shifts and the equivalent
//!   (fictitious) magnetic field of a beam,
//! * [`field`] polynomial + sampled field profiles along the ensemble axis,
//! * [`memory`] retrieval efficiency, decay curves, lifetime maps and
//!   Monte-Carlo averaging over fluctuating bias fields,
//! * [`compensator`] synthesis of compensation beams,
//! * [`slm`] phase-mask synthesis for shaping the compensation beam,
//! * [`export`] CSV/PGM writers shared by the command-line front end.
//!
//! Internal units: angular frequency in rad/µs, time in µs, magnetic field in
//! mG, length in cm, intensity in mW/mm².

pub mod angular;
pub mod atomic;
pub mod compensator;
pub mod error;
pub mod export;
pub mod field;
pub mod memory;
pub mod optimize;
pub mod quadrature;
pub mod slm;
pub mod stark;

pub use atomic::{load_rb85, AtomSystem, PhysicalConstants};
pub use compensator::{CompensationPlan, Compensator};
pub use error::{Error, Result};
pub use field::{FieldProfile, FieldTimeSeries};
pub use memory::{DecayCurve, EnsembleConfig, Envelope, MemorySimulator, Scheme};
pub use stark::{BeamConfig, IntensityProfile, Polarizabilities, StarkShift};
