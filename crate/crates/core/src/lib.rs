//! Validated numerics for the Hénon family `f(x, y) = (x² − a − b·y, x)`.
//!
//! The crate is organised bottom-up: outward-rounded intervals and complex
//! rectangles, the map itself, projective boxes, the parameter regions and
//! anchor data, crossed-mapping checks, Krawczyk certificates, cell-graph
//! enclosures, and the classification driver used by the command line tool.

pub mod complex;
pub mod cells;
pub mod certify;
pub mod crossed;
pub mod geometry;
pub mod henon;
pub mod interval;
pub mod krawczyk;
pub mod params;
pub mod special;

pub use complex::ComplexRect;
pub use henon::{ParamBox, PhaseRect};
pub use interval::Interval;
