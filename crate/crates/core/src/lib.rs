//! Adaptive-structure message passing (ASMP).
//!
//! The crate jointly denoises a node-feature matrix `H` and a dense structure
//! matrix `S` by alternating a gradient step on `H` with a proximal-gradient
//! step on `S`, and wraps that iteration as the propagation stage of a node
//! classifier (ASGNN).
//!
//! Module map:
//!
//! - [`graph`]: graph containers, degree and normalization algebra, LCC extraction.
//! - [`energy`]: the joint objective, its gradients and smoothness constants.
//! - [`solver`]: the proximal operator, alternating and joint iterations, traces.
//! - [`model`]: the ASGNN classifier, training and evaluation.
//! - [`perturb`]: stochastic block model generation and random edge perturbation.
//! - [`io`]: on-disk graph bundles and train/val/test splits.

pub mod energy;
pub mod error;
pub mod fmt;
pub mod graph;
pub mod io;
pub mod model;
pub mod perturb;
pub mod solver;

pub use ndarray;

pub use energy::{AsmpParams, EnergyBreakdown, Problem};
pub use error::{Error, Result};
pub use graph::{DegreeView, Graph, Normalization, Splits, StructureMatrix};
pub use solver::{SolverOptions, SolverOutput, SolverTrace, StepSizePolicy};
