//! Core of the tabletop wind exhibit simulator: relief ingestion, the wind
//! engines, tracers and storms, and the two interaction modes.

// Parameter checks use `!(x > 0.0)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod events;
pub mod field;
pub mod geometry;
pub mod modes;
pub mod particles;
pub mod repulse;
pub mod terrain;
pub mod windsim;

pub use events::Diagnostic;
pub use field::Field2;
pub use geometry::{Polygon, Vec2};
