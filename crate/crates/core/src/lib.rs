//! Exact arithmetic for p-adic differential and microdifferential operators:
//! congruence-level norms, Newton polygons, unit criteria and inversion.

pub mod catalog;
pub mod ctx;
pub mod diff_op;
pub mod error;
pub mod micro_op;
pub mod newton;
pub mod norm;
pub mod padic;
pub mod tate;
pub mod tower;

pub use ctx::Ctx;
pub use diff_op::{MicroOp, TailCertificate};
pub use error::{MicroError, Result};
pub use micro_op::{LevelParams, MulConfig, Prune};
pub use newton::NewtonPolygon;
pub use norm::{Norm, Rational};
pub use padic::PadicScalar;
pub use tate::TateSeries;
pub use tower::{RingLevel, UnitVerdict};
