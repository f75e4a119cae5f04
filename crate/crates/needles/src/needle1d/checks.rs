//! Pointwise verification of the one-dimensional curvature-dimension
//! inequalities satisfied by needle densities: the interpolation bound for
//! every admissible `N`, the contraction-ratio bound, and the differential
//! `psi'' - (psi')^2/(N-1) >= K` criterion.

use super::density::{DensityError, DensityForm, NeedleDensity};
use crate::comparison::{cd_density_bound, sin_like, CdParams, EffectiveDim, Extended};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Default slack for the sampled interpolation inequality.
pub const CD_SLACK: f64 = 1e-9;
/// Default slack for the differential criterion (finite differences).
pub const DIFF_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct CdReport {
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    /// Triples whose right-hand side was infinite (past the conjugate
    /// radius); recorded as automatic passes.
    pub infinite_brackets: usize,
    pub seed: u64,
}

/// Samples `trials` random `(s, t, lambda)` triples in the interior of the
/// density's reliable range and evaluates the CD interpolation inequality
/// with the branch dispatch determined by `N`. For `N = inf` the margin is
/// measured in log scale, matching the inequality's native form.
pub fn check_cd_density(
    rho: &NeedleDensity,
    params: &CdParams,
    trials: usize,
    seed: u64,
) -> CdReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = rho.reliable_range();
    let span = hi - lo;
    let margin_frac = 1e-6;
    let (a, b) = (lo + margin_frac * span, hi - margin_frac * span);
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    let mut infinite = 0usize;
    for _ in 0..trials {
        let u1: f64 = rng.gen_range(a..b);
        let u2: f64 = rng.gen_range(a..b);
        let (s, t) = if u1 < u2 { (u1, u2) } else { (u2, u1) };
        if t - s < 1e-12 * span {
            continue;
        }
        let lambda = rng.gen_range(1e-6..1.0 - 1e-6);
        let mid = (1.0 - lambda) * s + lambda * t;
        let margin = match params.n_eff() {
            EffectiveDim::Infinite => {
                let rhs = (1.0 - lambda) * rho.log_eval(s)
                    + lambda * rho.log_eval(t)
                    + 0.5 * params.k() * (1.0 - lambda) * lambda * (t - s) * (t - s);
                rho.log_eval(mid) - rhs
            }
            _ => match cd_density_bound(params, lambda, t - s, rho.eval(s), rho.eval(t)) {
                Extended::PosInfinity => {
                    infinite += 1;
                    continue;
                }
                Extended::Finite(rhs) => rho.eval(mid) - rhs,
            },
        };
        if margin < worst {
            worst = margin;
        }
        if margin < -CD_SLACK {
            violations += 1;
        }
    }
    CdReport {
        trials,
        violations,
        worst_margin: if worst.is_finite() { worst } else { 0.0 },
        infinite_brackets: infinite,
        seed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McpReport {
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub seed: u64,
}

/// Two-sided contraction-ratio bounds at `(a, s, t, b)`:
/// `{s_k(b-t)/s_k(b-s)}^{N-1} <= rho(t)/rho(s) <= {s_k(t-a)/s_k(s-a)}^{N-1}`
/// with `k = K/(N-1)`. Returns `None` when the positive-curvature ratio
/// degenerates past the conjugate radius (vacuous case).
pub fn mcp_ratio_bounds(
    params: &CdParams,
    a: f64,
    s: f64,
    t: f64,
    b: f64,
) -> Option<(f64, f64)> {
    let n = params
        .n_eff()
        .finite()
        .expect("mcp bounds need finite N in [n, inf)");
    assert!(n >= params.n_top() as f64 && n != 1.0, "need N in [n, inf), N != 1");
    assert!(a < s && s < t && t < b, "need a < s < t < b");
    let kappa = params.k() / (n - 1.0);
    let ratio = |num: f64, den: f64| -> Option<f64> {
        let sn = sin_like(kappa, num).ok()?;
        let sd = sin_like(kappa, den).ok()?;
        if sd <= 0.0 {
            return None;
        }
        Some((sn / sd).powf(n - 1.0))
    };
    let lower = ratio(b - t, b - s)?;
    let upper = ratio(t - a, s - a)?;
    Some((lower, upper))
}

/// Samples `a < s < t < b` quadruples and checks the ratio bounds with
/// absolute tolerance `1e-9`.
pub fn check_mcp_ratio(
    rho: &NeedleDensity,
    params: &CdParams,
    trials: usize,
    seed: u64,
) -> McpReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = rho.reliable_range();
    let span = hi - lo;
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let mut pts: Vec<f64> = (0..4).map(|_| rng.gen_range(lo..hi)).collect();
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (a, s, t, b) = (pts[0], pts[1], pts[2], pts[3]);
        if s - a < 1e-9 * span || t - s < 1e-9 * span || b - t < 1e-9 * span {
            continue;
        }
        let Some((lower, upper)) = mcp_ratio_bounds(params, a, s, t, b) else {
            continue;
        };
        let r = rho.eval(t) / rho.eval(s);
        if !r.is_finite() {
            continue;
        }
        let m = (r - lower).min(upper - r);
        if m < worst {
            worst = m;
        }
        if m < -1e-9 {
            violations += 1;
        }
    }
    McpReport {
        trials,
        violations,
        worst_margin: if worst.is_finite() { worst } else { 0.0 },
        seed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffReport {
    pub grid_points: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

/// Evaluates `psi = -log rho` on an interior grid and checks the
/// branch-dispatched differential criterion:
/// `psi'' - (psi')^2/(N-1) >= K - tol` for finite `N` outside `{0, 1}`,
/// `psi'' + (psi')^2 >= K - tol` at `N = 0`, `psi'' >= K - tol` at
/// `N = inf`. Closed forms use exact derivatives; convolved densities use
/// central differences at `h = 1e-4` with a slack tracking the stencil's
/// fourth-derivative truncation and rounding floor.
pub fn check_differential_form(
    rho: &NeedleDensity,
    params: &CdParams,
    tol: f64,
) -> Result<DiffReport, DensityError> {
    if matches!(rho.form(), DensityForm::Grid { .. }) {
        return Err(DensityError::NonSmoothDensity);
    }
    let h: f64 = 1e-4;
    let (lo, hi) = rho.reliable_range();
    let span = hi - lo;
    let margin = (2.5 * h).max(1e-3 * span);
    let (a, b) = (lo + margin, hi - margin);
    if !(a < b) {
        return Err(DensityError::BadDomain("reliable range too small".into()));
    }
    let grid = 512usize;
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    for i in 0..grid {
        let t = a + (b - a) * (i as f64 + 0.5) / grid as f64;
        let (d1, d2, slack) = if let Some((l1, l2)) = rho.log_derivs(t) {
            (-l1, -l2, tol)
        } else {
            let pm2 = -rho.log_eval(t - 2.0 * h);
            let pm1 = -rho.log_eval(t - h);
            let p0 = -rho.log_eval(t);
            let pp1 = -rho.log_eval(t + h);
            let pp2 = -rho.log_eval(t + 2.0 * h);
            if ![pm2, pm1, p0, pp1, pp2].iter().all(|v| v.is_finite()) {
                continue;
            }
            let d1 = (pp1 - pm1) / (2.0 * h);
            let d2 = (pp1 - 2.0 * p0 + pm1) / (h * h);
            // Truncation of the 3-point stencil is h^2 psi'''' / 12;
            // rounding costs eps |psi| / h^2.
            let d4 = (pp2 - 4.0 * pp1 + 6.0 * p0 - 4.0 * pm1 + pm2) / (h * h * h * h);
            let trunc = d4.abs() * h * h / 12.0;
            let round = 16.0 * f64::EPSILON * p0.abs().max(1.0) / (h * h);
            (d1, d2, tol + 2.0 * trunc + round)
        };
        let value = match params.n_eff() {
            EffectiveDim::Infinite => d2,
            EffectiveDim::Finite(n) if n == 0.0 => d2 + d1 * d1,
            EffectiveDim::Finite(n) => {
                assert!(n != 1.0);
                d2 - d1 * d1 / (n - 1.0)
            }
        };
        let m = value - params.k();
        if m < worst {
            worst = m;
        }
        if m < -slack {
            violations += 1;
        }
    }
    Ok(DiffReport {
        grid_points: grid,
        violations,
        worst_margin: if worst.is_finite() { worst } else { 0.0 },
    })
}
