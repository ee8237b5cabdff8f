#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Inverting the non-uniform difference operator `v -> v o Phi - v` for the
//! shift `Phi(t) = t + alpha * phi(t)` on an interval bounded by two
//! consecutive zeros of `phi`.

pub mod constants;
pub mod error;
pub mod field;
pub mod gram;
pub mod grid;
pub mod interp;
pub mod inverse;
pub mod jets;
pub mod kernel;
pub mod quad;
pub mod record;
pub mod series;
pub mod shift;

pub use constants::{compute_constants, ConstantsReport, KBranch};
pub use error::{Error, Result};
pub use field::{PerturbationField, Profile};
pub use grid::{lipschitz_norm, GridFunction, ScalarFunction};
pub use inverse::{solve, InverseSolution, SeriesSolver, SolvabilityVerdict};
pub use jets::{cp_bound, cp_norm, propagate, CpReport, JetState};
pub use kernel::{KernelElement, Seed};
pub use shift::{Orientation, ShiftMap};
