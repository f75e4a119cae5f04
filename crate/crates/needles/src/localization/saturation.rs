//! Saturated sets, the perturbed potentials `phi_delta`, their limit
//! indicator, and the mean-zero residual checks that certify optimality of
//! a potential ray by ray.

use super::rays::RayDecomposition;
use super::space::FiniteAsymSpace;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SaturationError {
    #[error("the given set is not saturated")]
    NotSaturated,
}

/// Closure of `A` under the tight relation in both directions, iterated to
/// a fixed point: the smallest saturated set containing `A`.
pub fn saturate(
    space: &FiniteAsymSpace,
    phi: &[f64],
    a: &[usize],
    eps_tight: f64,
) -> Vec<usize> {
    let n = space.len();
    let mut inside = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for &v in a {
        if !inside[v] {
            inside[v] = true;
            stack.push(v);
        }
    }
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if inside[v] || v == u {
                continue;
            }
            let fwd = (phi[v] - phi[u] - space.dist(u, v)).abs() <= eps_tight;
            let bwd = (phi[u] - phi[v] - space.dist(v, u)).abs() <= eps_tight;
            if fwd || bwd {
                inside[v] = true;
                stack.push(v);
            }
        }
    }
    (0..n).filter(|&v| inside[v]).collect()
}

/// `|sum_A f m|` for a saturated set `A`; at an optimal potential this
/// vanishes up to the solver's duality slack.
pub fn check_saturated_mean_zero(
    space: &FiniteAsymSpace,
    phi: &[f64],
    f: &[f64],
    a: &[usize],
    eps_tight: f64,
) -> Result<f64, SaturationError> {
    let closure = saturate(space, phi, a, eps_tight);
    let mut sorted: Vec<usize> = a.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if closure != sorted {
        return Err(SaturationError::NotSaturated);
    }
    Ok(a.iter().map(|&v| f[v] * space.weight(v)).sum::<f64>().abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanZeroReport {
    /// Largest `|integral of f against mu_gamma| * v(gamma)` over rays.
    pub max_ray_residual: f64,
    /// Largest `|f| m` over the D set.
    pub d_residual: f64,
}

/// Per-ray and D-set residuals of the mean-zero property for an optimal
/// potential's decomposition.
pub fn check_per_ray_mean_zero(
    space: &FiniteAsymSpace,
    f: &[f64],
    dec: &RayDecomposition,
) -> MeanZeroReport {
    let mut max_ray = 0.0f64;
    for ray in &dec.rays {
        let integral: f64 = ray
            .points
            .iter()
            .zip(&ray.mu)
            .map(|(&v, &mu)| f[v] * mu)
            .sum();
        max_ray = max_ray.max((integral * ray.v_weight).abs());
    }
    let d_residual = dec
        .d_set
        .iter()
        .map(|&v| (f[v] * space.weight(v)).abs())
        .fold(0.0f64, f64::max);
    MeanZeroReport { max_ray_residual: max_ray, d_residual }
}

/// The perturbed potential
/// `phi_delta(x) = min_y { phi(y) + d(y, x) - delta chi_Z(y) }`.
/// Satisfies `0 <= phi - phi_delta <= delta` pointwise for feasible `phi`.
pub fn phi_delta(
    space: &FiniteAsymSpace,
    phi: &[f64],
    z: &[usize],
    delta: f64,
) -> Vec<f64> {
    assert!(!z.is_empty(), "Z must be nonempty");
    assert!(delta > 0.0);
    let n = space.len();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    (0..n)
        .map(|x| {
            let mut best = f64::INFINITY;
            for y in 0..n {
                let v = phi[y] + space.dist(y, x) - if in_z[y] { delta } else { 0.0 };
                if v < best {
                    best = v;
                }
            }
            best
        })
        .collect()
}

/// The limit `Phi(x) = lim (phi - phi_delta)/delta`, evaluated exactly on
/// finite spaces by taking `delta` equal to half the minimal positive slack
/// `phi(y) + d(y, x) - phi(x)`. Values lie in `[0, 1]`, equal one on `Z`
/// and zero outside the saturation of `Z`.
pub fn limit_indicator(space: &FiniteAsymSpace, phi: &[f64], z: &[usize]) -> Vec<f64> {
    let n = space.len();
    let scale = space.max_distance().max(1.0);
    let mut min_slack = f64::INFINITY;
    for y in 0..n {
        for x in 0..n {
            let slack = phi[y] + space.dist(y, x) - phi[x];
            if slack > 1e-12 * scale && slack < min_slack {
                min_slack = slack;
            }
        }
    }
    let delta = if min_slack.is_finite() { 0.5 * min_slack } else { 1.0 };
    let pd = phi_delta(space, phi, z, delta);
    phi.iter().zip(&pd).map(|(p, q)| (p - q) / delta).collect()
}
