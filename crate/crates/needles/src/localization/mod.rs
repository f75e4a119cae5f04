//! Discrete needle-decomposition engine: the mean-zero maximisation on a
//! finite asymmetric metric-measure space, tight graphs and transport rays,
//! the D/T/B partition with its disintegration, and the saturation-based
//! optimality certificates.

mod flow;
mod rays;
mod saturation;
mod space;

pub use flow::{solve_potential, FlowError, PotentialSolution};
pub use rays::{
    check_cyclical_monotonicity, decompose, default_eps_tight, tight_graph, tight_pairs, Ray,
    RayDecomposition, RayError, TightGraph,
};
pub use saturation::{
    check_per_ray_mean_zero, check_saturated_mean_zero, limit_indicator, phi_delta, saturate,
    MeanZeroReport, SaturationError,
};
pub use space::{FiniteAsymSpace, SpaceError};
