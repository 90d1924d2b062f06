//! Dense tensors, a reverse-mode autodiff graph and SGD.
//!
//! Tensors are rank-2 and row-major; parameters live in a [`ParamStore`] and
//! are bound into a fresh [`Graph`] for every forward pass, so a graph never
//! outlives one sentence and needs no synchronisation.

pub mod checkpoint;
mod gradcheck;
mod graph;
mod optim;
mod params;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport, GradMismatch};
pub use graph::{Graph, Var, PROB_FLOOR};
pub use optim::{sgd_step, DEFAULT_CLIP_NORM};
pub use params::{Gradients, ParamId, ParamStore, Parameter};
pub use tensor::{Real, Tensor};
