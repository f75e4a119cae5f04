//! Brunn–Minkowski checks for the `N = 0` curvature condition: the exact
//! interval version on a weighted line and the midpoint-set version on
//! small discrete spaces.

use crate::comparison::{sigma, Extended};
use crate::localization::FiniteAsymSpace;
use serde::Serialize;

/// Weighted line measures with closed-form interval masses.
#[derive(Clone, Copy, Debug)]
pub enum LineWeight {
    Lebesgue,
    /// `dm = exp(rate * t) dt`.
    ExpRate(f64),
}

impl LineWeight {
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        assert!(b >= a);
        match self {
            LineWeight::Lebesgue => b - a,
            LineWeight::ExpRate(r) => {
                if r.abs() < 1e-14 {
                    b - a
                } else {
                    ((r * b).exp() - (r * a).exp()) / r
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BmRow {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BmReport {
    pub rows: Vec<BmRow>,
    pub violations: usize,
}

/// Bracket factor `(1 - lambda) s_{-K}(d) / s_{-K}((1 - lambda) d)`,
/// written through the distortion ratio; zero past the conjugate radius
/// (the inequality degenerates there).
fn bracket_factor(k: f64, lambda_side: f64, d: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    match sigma(-k, lambda_side, d) {
        Extended::Finite(s) => lambda_side / s,
        Extended::PosInfinity => 0.0,
    }
}

/// Interval Brunn–Minkowski on the weighted line: for `A_lambda` the
/// linear interpolation of two intervals,
/// `m(A_lambda) >= min over the two bracket terms`, checked at tolerance
/// `1e-9` for each `lambda` in the grid.
pub fn check_brunn_minkowski_line(
    weight: &LineWeight,
    k: f64,
    a0: (f64, f64),
    a1: (f64, f64),
    lambdas: &[f64],
) -> BmReport {
    assert!(a0.0 < a0.1 && a1.0 < a1.1);
    let m0 = weight.interval_mass(a0.0, a0.1);
    let m1 = weight.interval_mass(a1.0, a1.1);
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut violations = 0usize;
    for &lambda in lambdas {
        assert!(lambda > 0.0 && lambda < 1.0);
        let lo = (1.0 - lambda) * a0.0 + lambda * a1.0;
        let hi = (1.0 - lambda) * a0.1 + lambda * a1.1;
        let lhs = weight.interval_mass(lo, hi);
        // Minimise each factor over the attained distance range.
        let mut f0_min = f64::INFINITY;
        let mut f1_min = f64::INFINITY;
        let steps = 512;
        for i in 0..=steps {
            for j in 0..=steps {
                if i > 0 && i < steps && j > 0 && j < steps && (i % 16 != 0 || j % 16 != 0) {
                    continue;
                }
                let x = a0.0 + (a0.1 - a0.0) * i as f64 / steps as f64;
                let y = a1.0 + (a1.1 - a1.0) * j as f64 / steps as f64;
                let d = (y - x).abs();
                f0_min = f0_min.min(bracket_factor(k, 1.0 - lambda, d));
                f1_min = f1_min.min(bracket_factor(k, lambda, d));
            }
        }
        let rhs = (f0_min * m0).min(f1_min * m1);
        let margin = lhs - rhs;
        if margin < -1e-9 {
            violations += 1;
        }
        rows.push(BmRow { lambda, lhs, rhs, margin });
    }
    BmReport { rows, violations }
}

/// Discrete midpoint-set Brunn–Minkowski: `A_lambda` is enumerated as the
/// points lying on a geodesic between `A0` and `A1` at parameter `lambda`
/// up to `cell_tol`, and the inequality is required within one largest
/// cell mass.
pub fn check_brunn_minkowski_discrete(
    space: &FiniteAsymSpace,
    k: f64,
    a0: &[usize],
    a1: &[usize],
    lambdas: &[f64],
    cell_tol: f64,
) -> BmReport {
    assert!(space.len() <= 500, "exhaustive midpoint enumeration is quadratic");
    let m_of = |set: &[usize]| set.iter().map(|&v| space.weight(v)).sum::<f64>();
    let m0 = m_of(a0);
    let m1 = m_of(a1);
    let max_cell = (0..space.len()).map(|v| space.weight(v)).fold(0.0f64, f64::max);
    let mut rows = Vec::new();
    let mut violations = 0usize;
    for &lambda in lambdas {
        assert!(lambda > 0.0 && lambda < 1.0);
        let mut in_mid = vec![false; space.len()];
        let mut f0_min = f64::INFINITY;
        let mut f1_min = f64::INFINITY;
        for &x in a0 {
            for &y in a1 {
                let d = space.dist(x, y);
                f0_min = f0_min.min(bracket_factor(k, 1.0 - lambda, d));
                f1_min = f1_min.min(bracket_factor(k, lambda, d));
                for z in 0..space.len() {
                    let on_geodesic =
                        space.dist(x, z) + space.dist(z, y) <= d + cell_tol;
                    let at_lambda = (space.dist(x, z) - lambda * d).abs() <= cell_tol;
                    if on_geodesic && at_lambda {
                        in_mid[z] = true;
                    }
                }
            }
        }
        let lhs: f64 = (0..space.len())
            .filter(|&z| in_mid[z])
            .map(|z| space.weight(z))
            .sum();
        let rhs = (f0_min * m0).min(f1_min * m1);
        let margin = lhs - rhs;
        if margin < -(max_cell + 1e-12) {
            violations += 1;
        }
        rows.push(BmRow { lambda, lhs, rhs, margin });
    }
    BmReport { rows, violations }
}
