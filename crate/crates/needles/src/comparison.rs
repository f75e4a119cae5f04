//! Comparison functions of curvature-dimension theory: the Jacobi-equation
//! solution `s_kappa`, the distortion ratios `sigma` and `tau`, and the
//! `(K, N)` parameter bookkeeping shared by every curvature check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Extended non-negative value: either finite or `+inf`.
///
/// The infinity here is a semantic convention (the distortion coefficients
/// are defined to be infinite past the conjugate radius), not an overflow,
/// so it is kept as an explicit variant rather than an IEEE infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Extended {
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PosInfinity => None,
        }
    }

    /// Collapses to `f64`, mapping the infinite variant to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        match self {
            Extended::Finite(v) => v,
            Extended::PosInfinity => f64::INFINITY,
        }
    }
}

/// Effective dimension parameter `N`: a finite real or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EffectiveDim {
    Finite(f64),
    Infinite,
}

impl EffectiveDim {
    pub fn finite(self) -> Option<f64> {
        match self {
            EffectiveDim::Finite(v) => Some(v),
            EffectiveDim::Infinite => None,
        }
    }
}

impl std::fmt::Display for EffectiveDim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EffectiveDim::Finite(v) => write!(f, "{v}"),
            EffectiveDim::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ComparisonError {
    #[error("r = {r} exceeds the conjugate radius {max_r} for kappa = {kappa}")]
    DomainExceeded { kappa: f64, r: f64, max_r: f64 },
    #[error("effective dimension N = {0} is not admissible for this operation")]
    BadDimension(f64),
    #[error("parameters (K = {k}, N = {n}, n = {n_top}) violate the admissible range")]
    InadmissibleParams { k: f64, n: EffectiveDim, n_top: u32 },
}

/// Curvature bound `K` and effective dimension `N` with its admissible-range
/// bookkeeping. `n_top` is the topological dimension of the underlying space
/// (1 for needles); the admissible set is `(-inf, 0] u [n, inf]`, with `N = 1`
/// rejected when `n = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdParams {
    k: f64,
    n_eff: EffectiveDim,
    n_top: u32,
}

impl CdParams {
    pub fn new(k: f64, n_eff: EffectiveDim, n_top: u32) -> Result<Self, ComparisonError> {
        if !k.is_finite() || n_top == 0 {
            return Err(ComparisonError::InadmissibleParams { k, n: n_eff, n_top });
        }
        if let EffectiveDim::Finite(n) = n_eff {
            if !n.is_finite() {
                return Err(ComparisonError::InadmissibleParams { k, n: n_eff, n_top });
            }
            let admissible = n <= 0.0 || n >= n_top as f64;
            if !admissible || (n_top == 1 && n == 1.0) {
                return Err(ComparisonError::InadmissibleParams { k, n: n_eff, n_top });
            }
        }
        Ok(CdParams { k, n_eff, n_top })
    }

    /// Parameters for a one-dimensional needle (`n = 1`).
    pub fn needle(k: f64, n_eff: EffectiveDim) -> Result<Self, ComparisonError> {
        Self::new(k, n_eff, 1)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n_eff(&self) -> EffectiveDim {
        self.n_eff
    }

    pub fn n_top(&self) -> u32 {
        self.n_top
    }

    /// `kappa = K / (N - 1)`, finite whenever `N != 1` and `N != inf`.
    pub fn kappa_eff(&self) -> Option<f64> {
        match self.n_eff {
            EffectiveDim::Finite(n) if n != 1.0 => Some(self.k / (n - 1.0)),
            _ => None,
        }
    }
}

/// Relative slack accepted past the conjugate radius before reporting a
/// domain error in [`sin_like`].
const CONJUGATE_SLACK: f64 = 1e-9;

/// Threshold on `|kappa| r^2` below which the series expansion is used;
/// the ratio expressions built from `sin_like` cancel catastrophically
/// near `kappa = 0` otherwise.
const SERIES_THRESHOLD: f64 = 1e-6;

/// Solution of the Jacobi equation `f'' + kappa f = 0`, `f(0) = 0`,
/// `f'(0) = 1`:
/// `sin(sqrt(kappa) r)/sqrt(kappa)`, `r`, or `sinh(sqrt(-kappa) r)/sqrt(-kappa)`
/// according to the sign of `kappa`.
pub fn sin_like(kappa: f64, r: f64) -> Result<f64, ComparisonError> {
    assert!(r >= 0.0, "sin_like requires r >= 0, got {r}");
    if kappa > 0.0 {
        let max_r = std::f64::consts::PI / kappa.sqrt();
        if r > max_r * (1.0 + CONJUGATE_SLACK) {
            return Err(ComparisonError::DomainExceeded { kappa, r, max_r });
        }
    }
    Ok(sin_like_unchecked(kappa, r))
}

/// `sin_like` without the conjugate-radius guard; callers handle the
/// past-conjugate convention themselves.
fn sin_like_unchecked(kappa: f64, r: f64) -> f64 {
    let u = kappa * r * r;
    if u.abs() < SERIES_THRESHOLD {
        // 5-term Taylor expansion of s_kappa(r)/r in u = kappa r^2.
        return r * (1.0 - u / 6.0 + u * u / 120.0 - u * u * u / 5040.0
            + u * u * u * u / 362880.0);
    }
    if kappa > 0.0 {
        let s = kappa.sqrt();
        (s * r).sin() / s
    } else {
        let s = (-kappa).sqrt();
        (s * r).sinh() / s
    }
}

/// Distortion ratio `sigma^(lambda)_kappa(r) = s_kappa(lambda r)/s_kappa(r)`,
/// with `sigma(0) = lambda` and `sigma = +inf` for `r >= pi/sqrt(kappa)` when
/// `kappa > 0`.
pub fn sigma(kappa: f64, lambda: f64, r: f64) -> Extended {
    assert!(
        lambda > 0.0 && lambda < 1.0,
        "sigma requires lambda in (0,1), got {lambda}"
    );
    assert!(r >= 0.0, "sigma requires r >= 0, got {r}");
    if r == 0.0 {
        return Extended::Finite(lambda);
    }
    if kappa > 0.0 && r >= std::f64::consts::PI / kappa.sqrt() {
        return Extended::PosInfinity;
    }
    Extended::Finite(sin_like_unchecked(kappa, lambda * r) / sin_like_unchecked(kappa, r))
}

/// Distortion coefficient
/// `tau^(lambda)_{K,N}(r) = lambda^{1/N} sigma^(lambda)_{K/(N-1)}(r)^{(N-1)/N}`,
/// with `tau(0) = lambda` and `tau = +inf` past `pi sqrt((N-1)/K)` when
/// `K/(N-1) > 0`. `N` must be finite and different from 0 and 1.
pub fn tau(params: &CdParams, lambda: f64, r: f64) -> Result<Extended, ComparisonError> {
    assert!(
        lambda > 0.0 && lambda < 1.0,
        "tau requires lambda in (0,1), got {lambda}"
    );
    assert!(r >= 0.0, "tau requires r >= 0, got {r}");
    let n = match params.n_eff {
        EffectiveDim::Finite(n) if n != 0.0 && n != 1.0 => n,
        EffectiveDim::Finite(n) => return Err(ComparisonError::BadDimension(n)),
        EffectiveDim::Infinite => return Err(ComparisonError::BadDimension(f64::INFINITY)),
    };
    if r == 0.0 {
        return Ok(Extended::Finite(lambda));
    }
    let kappa = params.k / (n - 1.0);
    match sigma(kappa, lambda, r) {
        Extended::PosInfinity => Ok(Extended::PosInfinity),
        Extended::Finite(s) => {
            Ok(Extended::Finite(lambda.powf(1.0 / n) * s.powf((n - 1.0) / n)))
        }
    }
}

/// Checks the algebraic identity `tau^N = lambda sigma^{N-1}` at the given
/// point, within `1e-12` of the larger side. Returns `false` when either
/// side is infinite.
pub fn tau_sigma_identity_check(params: &CdParams, lambda: f64, r: f64) -> bool {
    let n = match params.n_eff.finite() {
        Some(n) if n != 0.0 && n != 1.0 => n,
        _ => return false,
    };
    let kappa = params.k / (n - 1.0);
    let (t, s) = match (tau(params, lambda, r), sigma(kappa, lambda, r)) {
        (Ok(Extended::Finite(t)), Extended::Finite(s)) => (t, s),
        _ => return false,
    };
    let lhs = t.powf(n);
    let rhs = lambda * s.powf(n - 1.0);
    (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0)
}

/// Right-hand side of the needle curvature-dimension inequality at
/// interpolation parameter `lambda`, gap `r = t - s` and endpoint densities
/// `rho_s`, `rho_t`.
///
/// Branches: for finite `N` different from 0 and 1 the bracket
/// `{sigma^{(1-lambda)}_{K/(N-1)}(r) rho_s^{1/(N-1)} + sigma^{(lambda)} rho_t^{1/(N-1)}}^{N-1}`;
/// for `N = 0` the harmonic-mean bracket with `kappa = -K`; for `N = inf`
/// the log-concavity bound `rho_s^{1-lambda} rho_t^lambda exp(K lambda(1-lambda) r^2 / 2)`.
pub fn cd_density_bound(
    params: &CdParams,
    lambda: f64,
    r: f64,
    rho_s: f64,
    rho_t: f64,
) -> Extended {
    match params.n_eff {
        EffectiveDim::Infinite => {
            let log = (1.0 - lambda) * rho_s.ln()
                + lambda * rho_t.ln()
                + 0.5 * params.k * (1.0 - lambda) * lambda * r * r;
            Extended::Finite(log.exp())
        }
        EffectiveDim::Finite(n) if n == 0.0 => {
            let kappa = -params.k;
            match (sigma(kappa, 1.0 - lambda, r), sigma(kappa, lambda, r)) {
                (Extended::Finite(s1), Extended::Finite(s2)) => {
                    Extended::Finite(1.0 / (s1 / rho_s + s2 / rho_t))
                }
                // Past the conjugate radius the harmonic bracket collapses to
                // zero and the inequality is vacuous.
                _ => Extended::Finite(0.0),
            }
        }
        EffectiveDim::Finite(n) => {
            assert!(n != 1.0, "cd_density_bound is undefined at N = 1");
            let kappa = params.k / (n - 1.0);
            let p = 1.0 / (n - 1.0);
            match (sigma(kappa, 1.0 - lambda, r), sigma(kappa, lambda, r)) {
                (Extended::Finite(s1), Extended::Finite(s2)) => {
                    let bracket = s1 * rho_s.powf(p) + s2 * rho_t.powf(p);
                    Extended::Finite(bracket.powf(n - 1.0))
                }
                _ => {
                    if n > 1.0 {
                        Extended::PosInfinity
                    } else {
                        Extended::Finite(0.0)
                    }
                }
            }
        }
    }
}
