//! Two-dimensional vector field tomography.
//!
//! The crate simulates electric fields of current dipoles in a bounded
//! conductive disk, turns boundary potentials into line-integral data over
//! electrode-to-electrode chords, and reconstructs the field on a coarser
//! mesh by solving
//!
//! ```text
//! min_e ||R_long e - I||_2^2 + alpha ||R_trans e||_1 + beta ||W e||_1
//! ```
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod field;
pub mod forward;
pub mod geometry;
pub mod inverse;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod plot;
pub mod ray;
pub mod scalar;

pub use error::{Error, Result};
pub use field::NodalField;
pub use forward::{DipoleSource, PotentialField};
pub use ray::{Flavor, RayMatrix};
pub use scalar::Real;

pub type Point = geometry::Point2<f64>;
pub type Mesh = geometry::TriMesh<f64>;
pub type Layout = geometry::ElectrodeLayout<f64>;
pub type Line = geometry::Chord<f64>;
pub type Field = NodalField<f64>;
pub type Rays = RayMatrix<f64>;
pub type Dipole = DipoleSource<f64>;
pub type Potential = PotentialField<f64>;
pub type Config = experiment::ExperimentConfig<f64>;
pub type Evaluation = metrics::EvalResult<f64>;
pub type Report = inverse::SolveReport<f64>;
