//! One-dimensional optimal transport: monotone-rearrangement displacement
//! interpolation and displacement convexity of the entropies against a
//! weighted reference line.

use super::density::{DensityError, NeedleDensity};
use crate::comparison::{sigma, tau, CdParams, EffectiveDim, Extended};
use crate::numerics::composite_simpson;
use serde::Serialize;

/// Quantile levels used by the transport grid: logarithmic refinement into
/// both tails around a uniform bulk, so that the discarded tail mass is at
/// the 1e-9 level.
fn quantile_levels(bulk: usize, tail: usize) -> Vec<f64> {
    let mut qs = Vec::with_capacity(bulk + 2 * tail);
    let q_min = 1e-9;
    let q_bulk = 1.0 / bulk as f64;
    for i in 0..tail {
        let f = i as f64 / tail as f64;
        qs.push(q_min * (q_bulk / q_min).powf(f));
    }
    for i in 0..=bulk {
        let q = i as f64 / bulk as f64;
        if q > q_bulk * 0.999 && q < 1.0 - q_bulk * 0.999 {
            qs.push(q);
        }
    }
    for i in (0..tail).rev() {
        let f = i as f64 / tail as f64;
        qs.push(1.0 - q_min * (q_bulk / q_min).powf(f));
    }
    qs
}

/// Transport grid for a pair of densities: quantile levels refined so that
/// both input supports are also covered uniformly in space (plain
/// mass-uniform levels leave wide interpolation cells in the tails, where
/// the linear interpolant would otherwise pick up spurious mass).
fn transport_levels(rho0: &NeedleDensity, rho1: &NeedleDensity) -> Vec<f64> {
    let mut qs = quantile_levels(20_000, 256);
    for rho in [rho0, rho1] {
        let (lo, hi) = rho.support();
        let cells = 6000;
        for i in 1..cells {
            let x = lo + (hi - lo) * i as f64 / cells as f64;
            let q = rho.cdf(x);
            if q > 1e-9 && q < 1.0 - 1e-9 {
                qs.push(q);
            }
        }
    }
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    qs.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    qs
}

/// Displacement interpolation between two densities on the line at time
/// `lambda`, through the monotone map `T = G1^{-1} o G0`. Returns the
/// interpolant (a sampled-grid density on the pushed quantile grid) and the
/// squared 2-Wasserstein distance `int |T(x) - x|^2 rho_0 dx`.
pub fn displacement_interpolate(
    rho0: &NeedleDensity,
    rho1: &NeedleDensity,
    lambda: f64,
) -> Result<(NeedleDensity, f64), DensityError> {
    assert!((0.0..=1.0).contains(&lambda), "lambda must lie in [0,1]");
    let qs = transport_levels(rho0, rho1);
    let mut xs = Vec::with_capacity(qs.len());
    let mut ys = Vec::with_capacity(qs.len());
    let mut w2_sq = 0.0;
    let mut prev_q: Option<f64> = None;
    let mut prev_disp: Option<f64> = None;
    for &q in &qs {
        let x0 = rho0.quantile(q);
        let x1 = rho1.quantile(q);
        let d0 = rho0.eval(x0);
        let d1 = rho1.eval(x1);
        if !(d0 > 0.0) || !(d1 > 0.0) || !d0.is_finite() || !d1.is_finite() {
            return Err(DensityError::QuantileFailure);
        }
        let xl = (1.0 - lambda) * x0 + lambda * x1;
        // Pushforward density: dq/dx_lambda by the chain rule.
        let slope = (1.0 - lambda) / d0 + lambda / d1;
        xs.push(xl);
        ys.push(1.0 / slope);
        let disp = (x1 - x0) * (x1 - x0);
        if let (Some(pq), Some(pd)) = (prev_q, prev_disp) {
            w2_sq += 0.5 * (disp + pd) * (q - pq);
        } else {
            // Close the left tail [0, q_first].
            w2_sq += disp * q;
        }
        prev_q = Some(q);
        prev_disp = Some(disp);
    }
    if let (Some(pq), Some(pd)) = (prev_q, prev_disp) {
        // Close the right tail [q_last, 1].
        w2_sq += pd * (1.0 - pq);
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DensityError::QuantileFailure);
    }
    let interp = NeedleDensity::from_grid(xs, ys)?;
    Ok((interp, w2_sq))
}

/// Reference measure of the ambient weighted line `m = e^{-V} dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceMeasure {
    Lebesgue,
    /// Normalised Gaussian weight `sqrt(k/2pi) exp(-k t^2 / 2)`.
    GaussianWeight { k: f64 },
}

impl ReferenceMeasure {
    pub fn log_density(&self, t: f64) -> f64 {
        match self {
            ReferenceMeasure::Lebesgue => 0.0,
            ReferenceMeasure::GaussianWeight { k } => {
                0.5 * (k / (2.0 * std::f64::consts::PI)).ln() - 0.5 * k * t * t
            }
        }
    }
}

/// Relative entropy `int rho log(rho / m) dt` of a density against the
/// reference weight.
pub fn relative_entropy(rho: &NeedleDensity, reference: &ReferenceMeasure) -> f64 {
    let (lo, hi) = rho.support();
    composite_simpson(
        &|t| {
            let v = rho.eval(t);
            if v <= 1e-300 {
                0.0
            } else {
                v * (rho.log_eval(t) - reference.log_density(t))
            }
        },
        lo,
        hi,
        20_000,
    )
}

/// Renyi-type entropy `S_N` of a density against the reference weight:
/// `-int r^{(N-1)/N} dm` for `N > 1` and `+int` for `N < 0`, where `r` is
/// the density with respect to the reference.
pub fn renyi_entropy(rho: &NeedleDensity, n: f64, reference: &ReferenceMeasure) -> f64 {
    assert!(!(0.0..=1.0).contains(&n), "S_N needs N > 1 or N < 0");
    let (lo, hi) = rho.support();
    let sign = if n > 1.0 { -1.0 } else { 1.0 };
    sign * composite_simpson(
        &|t| {
            let u = rho.eval(t);
            if u <= 1e-300 {
                return 0.0;
            }
            let log_m = reference.log_density(t);
            // u^{(N-1)/N} m^{1/N}, written in logs for stability.
            (((n - 1.0) / n) * u.ln() + log_m / n).exp()
        },
        lo,
        hi,
        20_000,
    )
}

/// Essential supremum of the density with respect to the reference weight,
/// scanned over the support grid.
pub fn ess_sup(rho: &NeedleDensity, reference: &ReferenceMeasure) -> f64 {
    let (lo, hi) = rho.support();
    let n = 20_000;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let t = lo + (hi - lo) * i as f64 / n as f64;
        let v = rho.eval(t) * (-reference.log_density(t)).exp();
        if v > best {
            best = v;
        }
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyLambdaResult {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub results: Vec<EntropyLambdaResult>,
    pub violations: usize,
    pub w2: f64,
}

/// Displacement convexity of the entropy along the 1D monotone geodesic:
/// checks the matching `CD(K, N)` inequality at each `lambda` in the grid,
/// with the coupling the monotone quantile coupling. The margin is
/// `rhs - lhs`, nonnegative up to tolerance when the condition holds.
pub fn check_entropy_convexity(
    rho0: &NeedleDensity,
    rho1: &NeedleDensity,
    params: &CdParams,
    lambda_grid: &[f64],
    reference: &ReferenceMeasure,
    tol: f64,
) -> Result<EntropyReport, DensityError> {
    let (_, w2_sq) = displacement_interpolate(rho0, rho1, 0.5)?;
    let w2 = w2_sq.sqrt();
    let mut results = Vec::with_capacity(lambda_grid.len());
    let mut violations = 0usize;
    // Monotone coupling support, for the coupled branches.
    let qs = quantile_levels(2000, 128);
    for &lambda in lambda_grid {
        assert!(lambda > 0.0 && lambda < 1.0, "lambda grid must lie in (0,1)");
        let (interp, _) = displacement_interpolate(rho0, rho1, lambda)?;
        let (lhs, rhs) = match params.n_eff() {
            EffectiveDim::Infinite => {
                let lhs = relative_entropy(&interp, reference);
                let rhs = (1.0 - lambda) * relative_entropy(rho0, reference)
                    + lambda * relative_entropy(rho1, reference)
                    - 0.5 * params.k() * (1.0 - lambda) * lambda * w2_sq;
                (lhs, rhs)
            }
            EffectiveDim::Finite(n) if n == 0.0 => {
                let lhs = ess_sup(&interp, reference);
                let kappa = -params.k();
                let mut sup0 = f64::NEG_INFINITY;
                let mut sup1 = f64::NEG_INFINITY;
                for &q in &qs {
                    let x0 = rho0.quantile(q);
                    let x1 = rho1.quantile(q);
                    let d = (x1 - x0).abs();
                    let r0 = rho0.eval(x0) * (-reference.log_density(x0)).exp();
                    let r1 = rho1.eval(x1) * (-reference.log_density(x1)).exp();
                    let f0 = match sigma(kappa, 1.0 - lambda, d) {
                        Extended::Finite(s) => s / (1.0 - lambda) * r0,
                        Extended::PosInfinity => f64::INFINITY,
                    };
                    let f1 = match sigma(kappa, lambda, d) {
                        Extended::Finite(s) => s / lambda * r1,
                        Extended::PosInfinity => f64::INFINITY,
                    };
                    sup0 = sup0.max(f0);
                    sup1 = sup1.max(f1);
                }
                (lhs, sup0.max(sup1))
            }
            EffectiveDim::Finite(n) => {
                assert!(n != 1.0, "entropy convexity is undefined at N = 1");
                let lhs = renyi_entropy(&interp, n, reference);
                // Coupled integral over the monotone coupling.
                let mut acc = 0.0;
                let mut prev: Option<(f64, f64)> = None;
                let mut infinite = false;
                for &q in &qs {
                    let x0 = rho0.quantile(q);
                    let x1 = rho1.quantile(q);
                    let d = (x1 - x0).abs();
                    let r0 = rho0.eval(x0) * (-reference.log_density(x0)).exp();
                    let r1 = rho1.eval(x1) * (-reference.log_density(x1)).exp();
                    let t0 = tau(params, 1.0 - lambda, d).map_err(|_| {
                        DensityError::BadDimension(n)
                    })?;
                    let t1 = tau(params, lambda, d)
                        .map_err(|_| DensityError::BadDimension(n))?;
                    let integrand = match (t0, t1) {
                        (Extended::Finite(a), Extended::Finite(b)) => {
                            a * r0.powf(-1.0 / n) + b * r1.powf(-1.0 / n)
                        }
                        _ => {
                            infinite = true;
                            break;
                        }
                    };
                    if let Some((pq, pv)) = prev {
                        acc += 0.5 * (integrand + pv) * (q - pq);
                    }
                    prev = Some((q, integrand));
                }
                let rhs = if infinite {
                    if n > 1.0 {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                } else if n > 1.0 {
                    -acc
                } else {
                    acc
                };
                (lhs, rhs)
            }
        };
        // The CD inequality reads lhs <= rhs.
        let margin = rhs - lhs;
        if margin < -tol {
            violations += 1;
        }
        results.push(EntropyLambdaResult { lambda, lhs, rhs, margin });
    }
    Ok(EntropyReport { results, violations, w2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::{CdParams, EffectiveDim};
    use approx::assert_abs_diff_eq;

    #[test]
    fn interpolation_endpoint_identity() {
        let rho = NeedleDensity::gaussian(1.0).unwrap();
        let (interp, w2) = displacement_interpolate(&rho, &rho, 0.37).unwrap();
        assert!(w2.abs() < 1e-12);
        for &t in &[-1.5, -0.3, 0.0, 0.9, 2.0] {
            assert_abs_diff_eq!(interp.eval(t), rho.eval(t), epsilon = 1e-6);
        }
    }

    #[test]
    fn gaussian_translates_interpolate_by_translation() {
        let m = 2.0;
        let rho0 = NeedleDensity::gaussian_centered(1.0, 0.0).unwrap();
        let rho1 = NeedleDensity::gaussian_centered(1.0, m).unwrap();
        let (interp, w2_sq) = displacement_interpolate(&rho0, &rho1, 0.5).unwrap();
        assert_abs_diff_eq!(w2_sq.sqrt(), m, epsilon = 1e-9);
        let expect = NeedleDensity::gaussian_centered(1.0, 0.5 * m).unwrap();
        for &t in &[0.0, 0.5, 1.0, 2.0] {
            assert_abs_diff_eq!(interp.eval(t), expect.eval(t), epsilon = 1e-6);
        }
    }

    #[test]
    fn uniform_translation_midpoint() {
        let rho0 = NeedleDensity::uniform(0.0, 1.0).unwrap();
        let rho1 = NeedleDensity::uniform(1.0, 2.0).unwrap();
        let (interp, _) = displacement_interpolate(&rho0, &rho1, 0.5).unwrap();
        for &t in &[0.6, 1.0, 1.4] {
            assert_abs_diff_eq!(interp.eval(t), 1.0, epsilon = 1e-6);
        }
        assert!(interp.eval(0.4) < 1e-6);
    }

    #[test]
    fn w2_is_geodesic_in_lambda() {
        let rho0 = NeedleDensity::gaussian_centered(1.0, 0.0).unwrap();
        let rho1 = NeedleDensity::gaussian_centered(1.0, 3.0).unwrap();
        let (i_025, _) = displacement_interpolate(&rho0, &rho1, 0.25).unwrap();
        let (i_075, _) = displacement_interpolate(&rho0, &rho1, 0.75).unwrap();
        let (_, full_sq) = displacement_interpolate(&rho0, &rho1, 0.5).unwrap();
        let (_, seg_sq) = displacement_interpolate(&i_025, &i_075, 0.5).unwrap();
        assert_abs_diff_eq!(seg_sq.sqrt(), 0.5 * full_sq.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn entropy_convexity_gaussian_reference() {
        // Translates of the reference Gaussian make the N = inf inequality
        // an identity.
        let k = 1.0;
        let reference = ReferenceMeasure::GaussianWeight { k };
        let rho0 = NeedleDensity::gaussian_centered(k, -0.7).unwrap();
        let rho1 = NeedleDensity::gaussian_centered(k, 1.1).unwrap();
        let params = CdParams::needle(k, EffectiveDim::Infinite).unwrap();
        let rep = check_entropy_convexity(
            &rho0,
            &rho1,
            &params,
            &[0.25, 0.5, 0.75],
            &reference,
            1e-6,
        )
        .unwrap();
        assert_eq!(rep.violations, 0);
        for r in &rep.results {
            assert_abs_diff_eq!(r.margin, 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn entropy_ess_sup_translation_equality() {
        // Remark-level N = 0 bound: the interpolant of two unit uniforms is
        // a unit uniform, so the ess-sup matches the endpoint maximum.
        let reference = ReferenceMeasure::Lebesgue;
        let rho0 = NeedleDensity::uniform(0.0, 1.0).unwrap();
        let rho1 = NeedleDensity::uniform(2.0, 3.0).unwrap();
        let params = CdParams::needle(0.0, EffectiveDim::Finite(0.0)).unwrap();
        let rep = check_entropy_convexity(
            &rho0,
            &rho1,
            &params,
            &[0.3, 0.5, 0.9],
            &reference,
            1e-6,
        )
        .unwrap();
        assert_eq!(rep.violations, 0);
        for r in &rep.results {
            assert_abs_diff_eq!(r.lhs, 1.0, epsilon = 1e-5);
            assert_abs_diff_eq!(r.rhs, 1.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn entropy_renyi_flat_case() {
        // K = 0, N = 2 on Lebesgue: S_N convexity for U[0,1] -> U[0,3],
        // with the quadrature oracle for both sides.
        let reference = ReferenceMeasure::Lebesgue;
        let rho0 = NeedleDensity::uniform(0.0, 1.0).unwrap();
        let rho1 = NeedleDensity::uniform(0.0, 3.0).unwrap();
        let params = CdParams::needle(0.0, EffectiveDim::Finite(2.0)).unwrap();
        let lambdas = [0.2, 0.5, 0.8];
        let rep =
            check_entropy_convexity(&rho0, &rho1, &params, &lambdas, &reference, 1e-6).unwrap();
        assert_eq!(rep.violations, 0);
        // Closed forms: S_2(mu_l) = -sqrt(1 + 2l), rhs = -((1-l) + sqrt(3) l).
        for (r, &l) in rep.results.iter().zip(&lambdas) {
            assert_abs_diff_eq!(r.lhs, -(1.0 + 2.0 * l).sqrt(), epsilon = 1e-4);
            assert_abs_diff_eq!(r.rhs, -((1.0 - l) + 3f64.sqrt() * l), epsilon = 1e-4);
        }
    }
}
