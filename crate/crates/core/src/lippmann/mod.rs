//! Volume integral equations for corrector fields on the reference inclusion.
//!
//! The transmission problems behind the boundary perturbation expansions
//! reduce to second-kind equations of Lippmann-Schwinger type on `B`: the
//! unknown corrector `phi` satisfies `(I + T)phi = rhs`, where `T` integrates
//! the contrast against derivatives of the fundamental solution. This module
//! discretizes those equations with vertex collocation on a simplicial mesh
//! of `B`, solves the full hierarchy needed by variable-background tensors,
//! and re-verifies every solve against its defining integral identity.

mod background;
mod corrector;
mod operator;
mod profile;

pub use background::{BackgroundModel, ModelMode};
pub use corrector::{CorrectorField, CorrectorKind, CorrectorWorkspace, SOLVE_TOL};
pub use operator::{IntegralOperator, OperatorKind};
pub use profile::{InclusionProfile, ProfileFn, Regularity};
