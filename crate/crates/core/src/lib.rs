//! Loss-tolerant linear steering inequalities built from any set of von
//! Neumann measurements.
//!
//! * [`measurements`]: bases, MUBs in prime dimension, lossy POVMs and the
//!   parent POVM certifying joint measurability at `η ≤ 1/n`.
//! * [`steering`]: the functional `F_{a|x}` with no-click weight `α`, its
//!   closed-form LHS bound and the exact bound by strategy enumeration.
//! * [`assemblages`]: maximally entangled, isotropic and Schmidt states, the
//!   assemblages they produce under loss and noise, and LHS assemblages.
//! * [`analysis`]: violations, critical efficiency and noise thresholds,
//!   normalized violations, region and threshold scans.

pub mod analysis;
pub mod assemblages;
pub mod error;
pub mod io;
pub mod matcore;
pub mod measurements;
pub mod steering;

pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, Ket};
pub use measurements::{Basis, MeasurementSet, Outcome, OutcomeString};
pub use steering::{DeterministicStrategy, LhsBoundReport, SteeringFunctional};
