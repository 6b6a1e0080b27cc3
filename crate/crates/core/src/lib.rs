//! Controllability analysis for the bilinear formation-control system
//!
//! ```text
//! ẋᵢ = Σ_{i→j ∈ E} u_ij (x_j − x_i)
//! ```
//!
//! on a directed graph `G = (V, E)` with `N` agents in `ℝⁿ`.
//!
//! The crate is organized bottom-up:
//!
//! - [`digraph`]: connectivity, the coarse strong component decomposition,
//!   skeleton and maximal set, transitive closure and the structural verdict.
//! - [`liealg`]: exact integer arithmetic on zero row-sum matrices, edge
//!   generators `A_ij`, brackets and Lie algebra closures.
//! - [`configspace`]: configurations, numeric rank, the set `Q`, rank strata
//!   and their local charts, simplex and affine-hull machinery.
//! - [`larc`]: the lifted vector fields `D(A)p`, the Lie algebra rank condition
//!   and the explicit witness basis.
//! - [`dynamics`]: exact piecewise-constant flows, simulation over switching
//!   graph schedules, steering and path tracking.
//!
//! Vertex and agent indices are 0-based in the API. Text formats and
//! human-readable reports use 1-based indices.

pub mod configspace;
pub mod digraph;
pub mod dynamics;
mod error;
pub mod larc;
pub mod liealg;
pub mod numeric;

pub use configspace::{AffineSubspace, Configuration, SampleKind, StratumChart, RANK_TOLERANCE};
pub use digraph::{Digraph, ScdReport, StructuralVerdict, VerdictKind};
pub use dynamics::{
    ControlInterval, ControlSchedule, Controls, EdgeControls, GraphSchedule, SteerOptions,
    SteerOutcome, SteerStatus, TrackOptions, TrackOutcome, Trajectory,
};
pub use error::{Error, Result};
pub use larc::{LarcReport, WitnessBasis, WitnessLabel};
pub use liealg::{EdgeGenerator, GeneratorCombination, LieBasis, ZeroRowSumMatrix};
