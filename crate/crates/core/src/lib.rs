//! Anisotropic mesh adaptation driven by recovered Hessians.
//!
//! The crate solves Dirichlet problems for the Poisson equation with linear
//! finite elements, recovers the solution Hessian at mesh nodes by four
//! post-processing methods (QLS, DLF, LLS, WF), turns the recovered field
//! into a regularized anisotropic metric, generates quasi-uniform meshes in
//! that metric, and measures the equidistribution/alignment and closeness
//! constants of the resulting meshes. The `study` module drives the whole
//! solve-recover-adapt loop over a ladder of mesh sizes and writes CSV
//! summaries; the `hessadapt` binary exposes it on the command line.

pub mod adapt;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod metric;
pub mod problems;
pub mod recovery;
pub mod selfcheck;
pub mod study;
pub mod vec2;

pub use error::{Error, Result};
pub use geometry::Mesh;
pub use metric::{MetricField, MetricKind, Sym2};
pub use vec2::Point2;
