//! Characteristic values of linear time-varying DAEs `E(t)x' + F(t)x = q(t)`.
//!
//! The index, the characteristic values `r, θ₀ … θ_{μ−1}` and the degree of
//! freedom `d` are computed pointwise by several independent routes (basic
//! reduction, elimination, dissection, strangeness, tractability chain,
//! derivative arrays) that must agree on regular points.

pub mod arrays;
pub mod error;
pub mod fixtures;
pub mod frameworks;
pub mod generator;
pub mod matfun;
pub mod numlin;
pub mod problem;
pub mod solver;
pub mod profile;
pub mod report;
pub mod scanner;
pub mod series;
pub mod tractability;

pub use error::{DaeError, Result};
pub use frameworks::{CharacteristicProfile, ReductionMode};
pub use matfun::{PiecewiseMatrixFunction, Side};
pub use numlin::{Projector, ProjectorKind, RankInfo, Subspace, TolerancePolicy};
pub use problem::{DaeProblem, Point};
pub use scanner::{scan, GridSpec, PointKind, ScanReport};
pub use solver::{consistent_initialization, integrate_completion, IvpSpec, SolveResult};
