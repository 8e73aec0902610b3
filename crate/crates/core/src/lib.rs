//! Verification engine for Engel and even contact structures built from open books.
//!
//! Everything symbolic lives in [`expr`]: canonical trigonometric polynomials over
//! coordinate indices. [`chart`] and [`fields`] add the differential geometry on top,
//! [`verify`] turns pointwise rank data into reports, and [`pipeline`] assembles the
//! collar and binding constructions.

pub mod chart;
pub mod error;
pub mod expr;
pub mod fields;
pub mod foliation;
pub mod invariants;
pub mod model_file;
pub mod pipeline;
pub mod report;
pub mod verify;

pub use chart::{Chart, CoordKind, Coordinate, Point, SampleMode};
pub use error::{Error, Result};
pub use expr::{Expr, TrigTerm};
pub use fields::{AffineMap, Distribution, OneForm, TwoForm, VectorField};
pub use verify::{CheckReport, Tolerances};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
