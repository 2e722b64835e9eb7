//! Exact extended formulations of a polygonal parabola, and the active-set
//! method that walks every one of their vertices.

pub mod activeset;
pub mod deformed;
pub mod error;
pub mod exactla;
pub mod extension;
pub mod lowerbound;
pub mod polygons;
pub mod polytope;

pub use error::{Error, Result};
