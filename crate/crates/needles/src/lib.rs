//! Transport-ray decompositions and isoperimetric profiles on asymmetric
//! metric-measure spaces.
//!
//! The crate makes the localization method computational at desk scale:
//!
//! - [`comparison`]: the distortion coefficients of curvature-dimension
//!   theory and the `(K, N)` parameter bookkeeping;
//! - [`norms`]: asymmetric Minkowski norms, reversibility constants, the
//!   weighted circle, and two-step norm smoothing;
//! - [`needle1d`]: densities on intervals with the full set of
//!   one-dimensional curvature checks, mollification, displacement
//!   interpolation and boundary content on the asymmetric line;
//! - [`model_profiles`]: the classical model isoperimetric profiles and a
//!   model-family numerical fallback;
//! - [`localization`]: the discrete needle-decomposition engine built on a
//!   transshipment solver with dual potentials;
//! - [`isoperimetry`]: end-to-end profile estimation on concrete spaces
//!   and certification of the reversibility-weighted model bound.

pub mod comparison;
pub mod io;
pub mod isoperimetry;
pub mod localization;
pub mod model_profiles;
pub mod needle1d;
pub mod norms;
pub mod numerics;
pub mod parallel;
