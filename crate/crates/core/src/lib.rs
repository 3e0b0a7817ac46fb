//! Finite-horizon laboratory for disjoint Li-Yorke chaos of operator families.

pub mod densities;
pub mod detectors;
pub mod operators;
pub mod space;
pub mod synthesizer;

pub use densities::{DensityEstimate, IndexSet, IntervalUnion, Scan, WeightSequence, WeightSpec};
pub use space::{SeminormFamily, SpaceSpec, TruncatedVector};
