//! Time-symmetric transition amplitudes for free and scattered wavepackets.
//!
//! A retarded state `ψ` (anchored at a source) and an advanced state `φ*`
//! (anchored at a detector) form the transition amplitude density
//! `ρ_s = φ*ψ`. Its integral `A_s` is constant in time, and `P_s = |A_s|²`
//! is the probability of the whole transition.

pub mod error;
pub mod field;
pub mod interferometer;
pub mod propagator;
pub mod scenario;
pub mod states;
pub mod transition;

pub use error::{Error, Result};
pub use num_complex::Complex64;
