//! Simulation laboratory for first passage percolation (FPP) on the products
//! `T_d x Z` and `T_{d-1,d} x Z`, where `T_d` is the infinite d-regular tree.
//!
//! The graphs are never materialized: vertices are tree words plus a Z
//! coordinate, edge weights come from a keyed pseudo-random oracle, and
//! geodesics are computed exactly by lazy best-first search. On top of the
//! engine sit coupled Monte Carlo experiments (common-random-number couplings
//! across subgraph restrictions) and estimators for dispersion scaling.

pub mod analysis;
pub mod cli;
pub mod experiments;
pub mod geodesic;
pub mod num;
pub mod rng;
pub mod topology;
pub mod weights;

/// Default scalar for weights, distances and statistics.
pub type Weight = f64;

pub use geodesic::{GeodesicResult, PathStats, SearchOptions};
pub use num::Real;
pub use topology::{EdgeKey, EdgeKind, Topology, TreeWord, Vertex};
pub use weights::{WeightOracle, WeightSpec};
