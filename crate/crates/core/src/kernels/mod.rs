//! Fundamental solutions and kernel moment quadrature.

mod eval;
mod gamma;

pub use eval::{KernelEval, ScalarDensity, VectorDensity};
pub use gamma::{gamma, grad_gamma, hess_gamma};
