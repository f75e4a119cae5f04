//! Shared numerical kernels: adaptive quadrature, root bracketing,
//! Gauss–Legendre rules and scalar minimisation.

/// Adaptive Simpson quadrature with an absolute error target.
///
/// The interval is split recursively until the standard Richardson estimate
/// `|S(a,m) + S(m,b) - S(a,b)| / 15` drops below the local share of `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_rule(a, b, fa, fm, fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 52)
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        let half = 0.5 * tol;
        simpson_recurse(f, a, m, fa, flm, fm, left, half, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, half, depth - 1)
    }
}

/// Composite Simpson rule with a fixed number of cells; robust for
/// integrands with many small kinks (sampled-grid densities), where
/// adaptive refinement would recurse at every kink.
pub fn composite_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, cells: usize) -> f64 {
    assert!(cells >= 1);
    if a == b {
        return 0.0;
    }
    let step = (b - a) / cells as f64;
    let mut acc = 0.0;
    for i in 0..cells {
        let x0 = a + step * i as f64;
        let x1 = if i == cells - 1 { b } else { x0 + step };
        let m = 0.5 * (x0 + x1);
        acc += (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(m) + f(x1));
    }
    acc
}

/// Bisection for a continuous monotone function: finds `x` in `[lo, hi]`
/// with `f(x) = target`. The bracket must satisfy `f(lo) <= target <= f(hi)`
/// (or the reverse); `xtol` bounds the final bracket width.
pub fn bisect(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, target: f64, xtol: f64) -> f64 {
    let mut lo = lo;
    let mut hi = hi;
    let rising = f(hi) >= f(lo);
    for _ in 0..200 {
        if (hi - lo).abs() <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        let below = if rising { v < target } else { v > target };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
pub fn golden_max(f: &dyn Fn(f64) -> f64, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = a;
    let mut b = b;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Standard normal distribution function, exact at the origin by
/// construction (`Phi(0) = 1/2`).
pub fn normal_cdf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let density = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if x > 0.0 {
        0.5 + adaptive_simpson(&density, 0.0, x, 1e-14)
    } else {
        0.5 - adaptive_simpson(&density, x, 0.0, 1e-14)
    }
}

/// Standard normal quantile by bisection on [`normal_cdf`]; `q = 1/2`
/// returns exactly zero.
pub fn normal_quantile(q: f64) -> f64 {
    assert!(q > 0.0 && q < 1.0, "quantile argument must be in (0,1)");
    if q == 0.5 {
        return 0.0;
    }
    bisect(&normal_cdf, -9.0, 9.0, q, 1e-13)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simpson_polynomial_is_exact() {
        let v = adaptive_simpson(&|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn simpson_sine_quarter_period() {
        let v = adaptive_simpson(&f64::sin, 0.0, std::f64::consts::FRAC_PI_2, 1e-12);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn bisect_recovers_cube_root() {
        let r = bisect(&|x| x * x * x, 0.0, 2.0, 5.0, 1e-13);
        assert_abs_diff_eq!(r, 5.0f64.cbrt(), epsilon = 1e-12);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        // The abscissa is limited to sqrt(f64 eps) by the flat comparisons
        // near the peak; the value itself is quadratically better.
        let (x, v) = golden_max(&|x| 3.0 - (x - 0.7) * (x - 0.7), -1.0, 2.0, 1e-11);
        assert_abs_diff_eq!(x, 0.7, epsilon = 1e-7);
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_high_degree() {
        // 16 nodes integrate polynomials up to degree 31 exactly.
        let rule = gauss_legendre(16);
        let integral: f64 = rule.iter().map(|&(x, w)| w * x.powi(20)).sum();
        assert_abs_diff_eq!(integral, 2.0 / 21.0, epsilon = 1e-13);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_abs_diff_eq!(normal_cdf(-1.0), 0.158_655_253_931_457, epsilon = 1e-9);
        assert_abs_diff_eq!(normal_cdf(1.96), 0.975_002_104_851_780, epsilon = 1e-9);
    }

    #[test]
    fn normal_quantile_round_trip() {
        for &q in &[1e-6, 0.1587, 0.5, 0.8413, 1.0 - 1e-6] {
            assert_abs_diff_eq!(normal_cdf(normal_quantile(q)), q, epsilon = 1e-12);
        }
        assert_eq!(normal_quantile(0.5), 0.0);
    }
}
