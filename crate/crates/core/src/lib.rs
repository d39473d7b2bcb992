//! Exact enumeration, pattern counting and series analysis for rooted planar
//! maps.

pub mod asymptotics;
pub mod distribution;
pub mod enumerate;
pub mod error;
pub mod format;
pub mod itypes;
pub mod map;
pub mod pattern;
pub mod poly;
pub mod series;
pub mod solver;

pub use error::{Error, Result};
pub use map::{CanonicalCode, Dart, FaceInfo, MapClass, RootedMap};
