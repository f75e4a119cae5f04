//! Model isoperimetric profiles `I_{K,N,D}`: the two classical closed
//! forms (sphere-type sin-power and Gaussian) and a numerical fallback
//! built as a pointwise infimum over a family of model needle densities.

use crate::comparison::{CdParams, EffectiveDim};
use crate::needle1d::{profile_1d, AsymLine, DensityError, NeedleDensity};
use crate::numerics::{adaptive_simpson, bisect, normal_quantile};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("no model density family exists for (K = {k}, N = {n}, D = {d})")]
    FamilyEmpty { k: f64, n: EffectiveDim, d: f64 },
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// A sampled profile: `theta` grid and values, serialising to
/// `theta,value` CSV rows.
#[derive(Clone, Debug, Serialize)]
pub struct Profile {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,value\n");
        for (t, v) in self.thetas.iter().zip(&self.values) {
            s.push_str(&format!("{t},{v}\n"));
        }
        s
    }
}

/// Sphere-type model profile for `K > 0`, `N in [n, inf)`: the boundary
/// density of the sin-power model at the level set splitting mass `theta`.
/// `R(theta)` is found by bisection of the normalised sin-power mass.
pub fn levy_gromov_profile(k: f64, n: f64, theta: f64) -> f64 {
    assert!(k > 0.0 && n > 1.0, "sphere branch needs K > 0 and N > 1");
    assert!((0.0..=1.0).contains(&theta));
    if theta == 0.0 || theta == 1.0 {
        return 0.0;
    }
    let kappa = k / (n - 1.0);
    let len = std::f64::consts::PI / kappa.sqrt();
    let dens = |r: f64| (kappa.sqrt() * r).sin().max(0.0).powf(n - 1.0);
    let total = adaptive_simpson(&dens, 0.0, len, 1e-12);
    let mass = |r: f64| adaptive_simpson(&dens, 0.0, r, 1e-12) / total;
    let r_theta = bisect(&mass, 0.0, len, theta, 1e-13 * len);
    dens(r_theta) / total
}

/// Gaussian model profile for `K > 0`, `N = D = inf`:
/// `sqrt(K/2pi) exp(-K a(theta)^2 / 2)` with `a(theta)` the
/// `Gaussian(0, 1/K)` quantile.
pub fn bakry_ledoux_profile(k: f64, theta: f64) -> f64 {
    assert!(k > 0.0, "gaussian branch needs K > 0");
    assert!((0.0..=1.0).contains(&theta));
    if theta == 0.0 || theta == 1.0 {
        return 0.0;
    }
    let a = normal_quantile(theta) / k.sqrt();
    (k / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * k * a * a).exp()
}

#[derive(Clone, Debug)]
pub struct ProfileSpec {
    pub params: CdParams,
    /// Diameter bound; `f64::INFINITY` for unbounded.
    pub d: f64,
    pub theta_grid: Vec<f64>,
}

impl ProfileSpec {
    pub fn new(params: CdParams, d: f64, theta_grid: Vec<f64>) -> Self {
        assert!(d > 0.0);
        assert!(theta_grid.iter().all(|&t| t > 0.0 && t < 1.0));
        ProfileSpec { params, d, theta_grid }
    }
}

/// Pointwise infimum of needle profiles over the model-density family
/// consistent with the curvature-dimension equality cases: sin powers for
/// effective positive curvature, affine/cosh/sinh/exponential powers
/// otherwise, exponentially tilted Gaussians at `N = inf`, on intervals of
/// length at most `D`. On the parameter ranges of the two classical closed
/// forms it reproduces them.
pub fn numerical_model_profile(spec: &ProfileSpec) -> Result<Profile, ProfileError> {
    let family = model_family(&spec.params, spec.d)?;
    let line = AsymLine::symmetric();
    let mut values = vec![f64::INFINITY; spec.theta_grid.len()];
    for dens in &family {
        for (i, &theta) in spec.theta_grid.iter().enumerate() {
            let v = profile_1d(dens, &line, theta);
            if v < values[i] {
                values[i] = v;
            }
        }
    }
    Ok(Profile { thetas: spec.theta_grid.clone(), values })
}

/// Model needle densities for `(K, N, D)`. The family realises equality in
/// the density interpolation inequality: `rho^(1/(N-1))` solves the Jacobi
/// equation with `kappa = K/(N-1)` (Gaussian tilts at `N = inf`).
pub fn model_family(params: &CdParams, d: f64) -> Result<Vec<NeedleDensity>, ProfileError> {
    let k = params.k();
    let empty = |n: EffectiveDim| ProfileError::FamilyEmpty { k, n, d };
    let mut family = Vec::new();
    match params.n_eff() {
        EffectiveDim::Infinite => {
            if k > 0.0 {
                if d.is_infinite() {
                    family.push(NeedleDensity::gaussian(k)?);
                } else {
                    // Truncated Gaussian windows of length d.
                    let reach = 4.0 / k.sqrt();
                    let steps = 48;
                    for i in 0..=steps {
                        let w = -reach - d * 0.5 + (2.0 * reach + d) * i as f64 / steps as f64;
                        family.push(NeedleDensity::gaussian_window(k, 0.0, w, w + d)?);
                    }
                }
            } else {
                if d.is_infinite() {
                    return Err(empty(EffectiveDim::Infinite));
                }
                // exp(-k t^2/2 - c t) on [0, d]: realised as off-centre
                // windows of a (possibly inverted) Gaussian plus pure tilts.
                if k < 0.0 {
                    let steps = 48;
                    for i in 0..=steps {
                        let w = -2.0 * d + (4.0 * d - d) * i as f64 / steps as f64;
                        // exp(+|k| t^2 / 2) windows, via Jacobi power with
                        // p = 1 of cosh/sinh is not exact; use grid samples
                        // of the closed form instead.
                        let xs: Vec<f64> =
                            (0..=2048).map(|j| w + d * j as f64 / 2048.0).collect();
                        let ys: Vec<f64> =
                            xs.iter().map(|&t| (-0.5 * k * t * t).exp()).collect();
                        family.push(NeedleDensity::from_grid(xs, ys)?);
                    }
                }
                for i in 0..=32 {
                    let c = -8.0 / d + 16.0 / d * i as f64 / 32.0;
                    if c.abs() < 1e-12 {
                        family.push(NeedleDensity::uniform(0.0, d)?);
                    } else {
                        family.push(NeedleDensity::exp_tilt(c, 0.0, d)?);
                    }
                }
            }
        }
        EffectiveDim::Finite(n) => {
            if n == 0.0 || n == 1.0 {
                return Err(empty(EffectiveDim::Finite(n)));
            }
            let p = n - 1.0;
            let kappa = k / p;
            if kappa > 0.0 && n > 1.0 {
                // Sphere-type models: sin powers on windows of length
                // min(d, conjugate length).
                let len = std::f64::consts::PI / kappa.sqrt();
                if d >= len {
                    family.push(NeedleDensity::sin_power(kappa, p)?);
                } else {
                    let steps = 64;
                    for i in 0..=steps {
                        let lo = (len - d) * i as f64 / steps as f64;
                        family.push(NeedleDensity::jacobi_power(
                            kappa,
                            0.0,
                            1.0,
                            p,
                            0.0,
                            (lo, lo + d),
                        )?);
                    }
                }
            } else if kappa == 0.0 {
                if d.is_infinite() {
                    return Err(empty(EffectiveDim::Finite(n)));
                }
                // Affine powers (c + t)^p on [0, d], both orientations,
                // plus the uniform limit.
                family.push(NeedleDensity::uniform(0.0, d)?);
                for i in 0..32 {
                    let c = d * 10f64.powf(-3.0 + 5.0 * i as f64 / 31.0);
                    for sign in [1.0, -1.0] {
                        let (a_coef, b_coef) = (c + if sign < 0.0 { d } else { 0.0 }, sign);
                        if let Ok(dens) =
                            NeedleDensity::jacobi_power(0.0, a_coef, b_coef, p, 0.0, (0.0, d))
                        {
                            family.push(dens);
                        }
                    }
                }
            } else {
                // kappa < 0 (K < 0 with N > 1, or K > 0 with N < 0):
                // cosh/sinh/exponential powers. Unbounded diameters are
                // only integrable for decaying cosh powers (p < -1).
                let s = (-kappa).sqrt();
                if d.is_infinite() {
                    if p < -1.0 {
                        family.push(NeedleDensity::jacobi_power(
                            kappa,
                            1.0,
                            0.0,
                            p,
                            0.0,
                            (f64::NEG_INFINITY, f64::INFINITY),
                        )?);
                    } else {
                        return Err(empty(EffectiveDim::Finite(n)));
                    }
                } else {
                    // cosh family centred at a sweep of offsets.
                    let steps = 32;
                    for i in 0..=steps {
                        let origin = -d + 2.0 * d * i as f64 / steps as f64;
                        if let Ok(dens) =
                            NeedleDensity::jacobi_power(kappa, 1.0, 0.0, p, origin, (0.0, d))
                        {
                            family.push(dens);
                        }
                    }
                    // sinh family (positive on (origin, inf)).
                    for i in 0..steps {
                        let origin = -d * (0.02 + 3.0 * i as f64 / steps as f64);
                        if let Ok(dens) =
                            NeedleDensity::jacobi_power(kappa, 0.0, 1.0, p, origin, (0.0, d))
                        {
                            family.push(dens);
                        }
                    }
                    // Pure exponentials exp(+-s p t).
                    for sign in [1.0, -1.0] {
                        if let Ok(dens) = NeedleDensity::exp_tilt(sign * s * p, 0.0, d) {
                            family.push(dens);
                        }
                    }
                }
            }
        }
    }
    if family.is_empty() {
        return Err(empty(params.n_eff()));
    }
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn levy_gromov_midpoint_closed_form() {
        // K = 2, N = 3: by symmetry R(1/2) = pi/2 and int sin^2 = pi/2.
        let v = levy_gromov_profile(2.0, 3.0, 0.5);
        assert_abs_diff_eq!(v, 2.0 / std::f64::consts::PI, epsilon = 1e-10);
        assert_eq!(levy_gromov_profile(2.0, 3.0, 0.0), 0.0);
        assert_eq!(levy_gromov_profile(1.0, 4.0, 1.0), 0.0);
    }

    #[test]
    fn levy_gromov_quarter_matches_needle_profile() {
        // Cross-check against the needle profile of the sin^2 density.
        let lg = levy_gromov_profile(2.0, 3.0, 0.25);
        let dens = NeedleDensity::sin_power(1.0, 2.0).unwrap();
        let needle = profile_1d(&dens, &AsymLine::symmetric(), 0.25);
        assert_abs_diff_eq!(lg, needle, epsilon = 1e-8);
    }

    #[test]
    fn bakry_ledoux_values() {
        let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert_eq!(bakry_ledoux_profile(1.0, 0.5), inv_sqrt_2pi);
        assert_eq!(bakry_ledoux_profile(4.0, 0.5), 2.0 * inv_sqrt_2pi);
        // a(0.1587) is about -1: standard normal CDF oracle.
        assert_abs_diff_eq!(bakry_ledoux_profile(1.0, 0.1587), 0.2420, epsilon = 5e-4);
    }

    #[test]
    fn profiles_are_symmetric_and_concave() {
        let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        let lg: Vec<f64> = grid.iter().map(|&t| levy_gromov_profile(2.0, 3.0, t)).collect();
        let bl: Vec<f64> = grid.iter().map(|&t| bakry_ledoux_profile(1.0, t)).collect();
        for vals in [&lg, &bl] {
            let m = vals.len();
            for i in 0..m {
                assert_abs_diff_eq!(vals[i], vals[m - 1 - i], epsilon = 1e-10);
            }
            for i in 1..m - 1 {
                // Concavity: nonnegative midpoint gap on the uniform grid.
                assert!(vals[i] >= 0.5 * (vals[i - 1] + vals[i + 1]) - 1e-8);
            }
        }
    }

    #[test]
    fn numerical_profile_matches_levy_gromov() {
        let params = CdParams::needle(2.0, EffectiveDim::Finite(3.0)).unwrap();
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 / 21.0).collect();
        let spec = ProfileSpec::new(params, std::f64::consts::PI, grid.clone());
        let prof = numerical_model_profile(&spec).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            assert_abs_diff_eq!(prof.values[i], levy_gromov_profile(2.0, 3.0, t), epsilon = 1e-6);
        }
    }

    #[test]
    fn numerical_profile_matches_bakry_ledoux() {
        let params = CdParams::needle(1.0, EffectiveDim::Infinite).unwrap();
        let spec = ProfileSpec::new(params, f64::INFINITY, vec![0.5]);
        let prof = numerical_model_profile(&spec).unwrap();
        assert_abs_diff_eq!(prof.values[0], bakry_ledoux_profile(1.0, 0.5), epsilon = 1e-6);
    }

    #[test]
    fn flat_family_infimum_matches_brute_force() {
        // (K = 0, N = 2, D = 1): the family infimum against a denser
        // brute-force parameter sweep over the same density family.
        let params = CdParams::needle(0.0, EffectiveDim::Finite(2.0)).unwrap();
        let spec = ProfileSpec::new(params, 1.0, vec![0.5]);
        let prof = numerical_model_profile(&spec).unwrap();
        let line = AsymLine::symmetric();
        let mut brute = profile_1d(&NeedleDensity::uniform(0.0, 1.0).unwrap(), &line, 0.5);
        for i in 0..1000 {
            let c = 10f64.powf(-3.0 + 5.0 * i as f64 / 999.0);
            for sign in [1.0, -1.0] {
                let (a_coef, b_coef) = (c + if sign < 0.0 { 1.0 } else { 0.0 }, sign);
                if let Ok(d) =
                    NeedleDensity::jacobi_power(0.0, a_coef, b_coef, 1.0, 0.0, (0.0, 1.0))
                {
                    brute = brute.min(profile_1d(&d, &line, 0.5));
                }
            }
        }
        assert_abs_diff_eq!(prof.values[0], brute, epsilon = 1e-4);
        assert!(prof.values[0] <= brute + 1e-9);
    }

    #[test]
    fn diameter_continuity() {
        // I_{K,N,D+eps} is Cauchy in eps at the 1e-3 level.
        let thetas = vec![0.3, 0.5];
        let mut prev: Option<Vec<f64>> = None;
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let params = CdParams::needle(2.0, EffectiveDim::Finite(3.0)).unwrap();
            let spec = ProfileSpec::new(params, std::f64::consts::PI + eps, thetas.clone());
            let prof = numerical_model_profile(&spec).unwrap();
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(&prof.values) {
                    assert!((a - b).abs() < 1e-3);
                }
            }
            prev = Some(prof.values);
        }
    }

    #[test]
    fn family_empty_for_inadmissible() {
        let params = CdParams::needle(0.0, EffectiveDim::Finite(2.0)).unwrap();
        let err = model_family(&params, f64::INFINITY);
        assert!(matches!(err, Err(ProfileError::FamilyEmpty { .. })));
    }
}
