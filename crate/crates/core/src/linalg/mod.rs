//! Linear algebra backends: dense second-kind systems (direct below a size
//! cap, restarted GMRES above), CSR with conjugate gradients for FEM, and a
//! rank-one augmented solve for operators with a known kernel.

pub mod dense;
pub mod gmres;
pub mod sparse;

pub use dense::{DenseOp, DenseSolution, DenseSolver, DENSE_FACTOR_CAP};
pub use gmres::{gmres, GmresOptions, GmresResult};
pub use sparse::{
    cg_solve, conjugate_gradient, solve_constrained, CgOptions, CsrMatrix, SparseSolution,
};
