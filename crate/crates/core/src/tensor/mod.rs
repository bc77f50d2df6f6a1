//! Complex linear algebra and reverse-mode differentiation.

pub mod gradcheck;
mod graph;
mod matrix;

pub use graph::{population_variance, Gradients, Graph, Op, OpKind, VarId};
pub use matrix::{ComplexMatrix, HERMITIAN_TOL};

pub use graph::sigmoid;
