//! Qubit transfer between two-level atoms that take turns coupling to the
//! end cavities of a coupled-cavity array.
//!
//! The crate covers the lossless single-mode protocol in closed form, the
//! full N-mode dynamics used to validate the single-mode reduction, the
//! dissipative master-equation treatment, and sweep drivers for
//! the fidelity-versus-length, timing-error and delay curves.

pub mod error;
pub mod exact_dynamics;
pub mod ideal_protocol;
pub mod integrator;
pub mod mode_basis;
pub mod open_system;
pub mod optimize;
pub mod params;
pub mod sweep;

pub use error::{Error, Result};
pub use ideal_protocol::{BlochState, ProtocolSchedule};
pub use mode_basis::ModeBasis;
pub use params::{ChainParams, ModeDecayScaling};
