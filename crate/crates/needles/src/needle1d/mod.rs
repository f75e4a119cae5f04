//! One-dimensional needles: densities on intervals, verification of the
//! curvature-dimension density inequalities for every admissible `N`, the
//! differential criterion, one-sided mollification, displacement convexity
//! and isoperimetric boundary content on the asymmetric line.

mod checks;
mod density;
mod profile;
mod transport;

pub use checks::{
    check_cd_density, check_differential_form, check_mcp_ratio, mcp_ratio_bounds, CdReport,
    DiffReport, McpReport, CD_SLACK, DIFF_SLACK,
};
pub use density::{
    AsymLine, DensityError, DensityForm, MollifyBranch, NeedleDensity, CDF_CELLS, TAIL_QUANTILE,
};
pub use profile::{boundary_measure_1d, profile_1d, PROFILE_SCAN};
pub use transport::{
    check_entropy_convexity, displacement_interpolate, ess_sup, relative_entropy, renyi_entropy,
    EntropyLambdaResult, EntropyReport, ReferenceMeasure,
};
