//! Denoising of sphere-valued (S¹, S², S³) and SO(3)-valued signals on
//! graphs through a convex relaxation of Tikhonov regularization, solved by
//! ADMM with small per-edge PSD projections.

pub mod admm;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod manifold;
pub mod model;
pub mod pipeline;
pub mod smallsym;
pub mod synth;

pub use admm::{admm_solve, DenoiseResult, SolverConfig};
pub use error::{Error, Result};
pub use graph::{grid_graph, line_graph, Graph, Weights};
pub use manifold::{Quaternion, RotationMatrix};
pub use model::{BlockField, EdgeScalars, SphereSignal};
pub use smallsym::SymMatrix;
