//! Workbench for heralded linear-optical entangled-state generation.
//!
//! The crate simulates photon-number (Fock) states propagating through
//! multi-mode interferometers, analyzes heralding probabilities and
//! target-state overlaps, ships the closed-form reference circuits that
//! produce dual-rail 3-GHZ states at 1/54 and Bell states at 2/27, and
//! implements the two-stage numerical search (relaxed objective on Cayley
//! charts, then constrained circuit simplification) used to discover such
//! circuits.
//!
//! Module map:
//! - [`fock`] — Fock states, permanents, transition amplitudes, heralding
//!   analysis.
//! - [`circuit`] — two-mode elements, phase layers, circuit composition,
//!   rectangular mesh decomposition, the Cayley chart and the simplicity
//!   cost.
//! - [`optimizer`] — damped BFGS with Wolfe line search, Haar sampling,
//!   the stage-1 globalized search and the stage-2 augmented-Lagrangian
//!   refinement.
//! - [`schemes`] — reference circuits (GHZ 1/54, Bell 2/27), target-state
//!   factories, Ω-block coefficient algebra and declarative scheme
//!   verification.

pub mod circuit;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod optimizer;
pub mod schemes;

pub use error::{Error, Result};
