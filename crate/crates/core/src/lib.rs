//! Rational points near planar curves: counting, truncated limsup-set
//! membership, measure and ubiquity experiments, and dimension estimates for
//! simultaneous and multiplicative Diophantine approximation.

pub mod approxfn;
pub mod curve;
pub mod dimension;
pub mod error;
pub mod fit;
pub mod limsup;
pub mod measure;
pub mod ratpoints;
pub mod real;
pub mod ubiquity;

pub use approxfn::{ApproxFn, SeriesKind, SeriesMethod, SeriesVerdict};

pub use error::{Error, Result};

