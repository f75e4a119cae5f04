//! Asymmetric Minkowski norms on R^n (n <= 3), induced asymmetric
//! distances, reversibility constants, the weighted-circle structure and the
//! two-step norm smoothing (directional mollification followed by
//! strong convexification).

use crate::numerics::{adaptive_simpson, gauss_legendre, golden_max};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NormError {
    #[error("matrix is not symmetric positive definite")]
    BadMatrix,
    #[error("Randers drift is too large: b^T A^-1 b = {0} >= 1")]
    InvalidRanders(f64),
    #[error("table samples do not describe a norm: {0}")]
    NotANorm(String),
    #[error("no delta in the search schedule achieves the (1+eps) sandwich")]
    ToleranceNotMet,
    #[error("operation not supported in dimension {0}")]
    UnsupportedDimension(usize),
}

/// Dense symmetric positive-definite matrix of size `dim <= 3`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    data: Vec<f64>,
    chol: Vec<f64>,
}

impl SpdMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NormError> {
        let dim = rows.len();
        if dim == 0 || dim > 3 || rows.iter().any(|r| r.len() != dim) {
            return Err(NormError::BadMatrix);
        }
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = rows[i][j];
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * rows[i][j].abs().max(1.0) {
                    return Err(NormError::BadMatrix);
                }
            }
        }
        let chol = cholesky(&data, dim).ok_or(NormError::BadMatrix)?;
        Ok(SpdMatrix { dim, data, chol })
    }

    pub fn identity(dim: usize) -> Self {
        let mut rows = vec![vec![0.0; dim]; dim];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        Self::from_rows(&rows).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `x^T A x`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += x[i] * self.data[i * self.dim + j] * x[j];
            }
        }
        acc
    }

    /// `b^T A^{-1} b` via the cached Cholesky factor.
    pub fn inv_quad(&self, b: &[f64]) -> f64 {
        // Solve L y = b, then the quadratic form is |y|^2.
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.chol[i * n + j] * y[j];
            }
            y[i] = s / self.chol[i * n + i];
        }
        y.iter().map(|v| v * v).sum()
    }
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Positively 1-homogeneous convex norm table in the plane: values at `M`
/// uniformly spaced unit directions, evaluated by the supporting-line
/// envelope of the induced boundary polygon.
#[derive(Clone, Debug)]
pub struct TableNorm {
    values: Vec<f64>,
    // Boundary polygon vertices values[i]^-1 * (cos, sin)(2 pi i / M).
    verts: Vec<(f64, f64)>,
}

pub const TABLE_DIRECTIONS: usize = 4096;

impl TableNorm {
    fn new(values: Vec<f64>) -> Result<Self, NormError> {
        let m = values.len();
        if m < 8 {
            return Err(NormError::NotANorm("too few directional samples".into()));
        }
        if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(NormError::NotANorm(
                "norm samples must be positive and finite".into(),
            ));
        }
        let mut verts = Vec::with_capacity(m);
        for (i, &v) in values.iter().enumerate() {
            let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            verts.push((th.cos() / v, th.sin() / v));
        }
        // Convex-position validation: consecutive boundary edges must turn
        // left (collinear runs are fine; polygonal unit balls are allowed).
        let scale: f64 = verts.iter().map(|v| v.0.abs().max(v.1.abs())).fold(0.0, f64::max);
        for i in 0..m {
            let a = verts[i];
            let b = verts[(i + 1) % m];
            let c = verts[(i + 2) % m];
            let e1 = (b.0 - a.0, b.1 - a.1);
            let e2 = (c.0 - b.0, c.1 - b.1);
            let cross = e1.0 * e2.1 - e1.1 * e2.0;
            if cross < -1e-9 * scale * scale {
                return Err(NormError::NotANorm(format!(
                    "boundary polygon is reflex near sample {i}"
                )));
            }
        }
        Ok(TableNorm { values, verts })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let (px, py) = (x[0], x[1]);
        if px == 0.0 && py == 0.0 {
            return 0.0;
        }
        let m = self.verts.len();
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut th = py.atan2(px);
        if th < 0.0 {
            th += two_pi;
        }
        let mut i = ((th / two_pi) * m as f64).floor() as usize;
        if i >= m {
            i = m - 1;
        }
        // Supporting line through the sector edge (v_i, v_{i+1}):
        // ||x|| = cross(x, d) / cross(v_i, d) with d the edge vector.
        let a = self.verts[i];
        let b = self.verts[(i + 1) % m];
        let d = (b.0 - a.0, b.1 - a.1);
        let denom = a.0 * d.1 - a.1 * d.0;
        if denom.abs() < 1e-300 {
            // Degenerate edge: fall back to the radial sample.
            return (px * px + py * py).sqrt() * self.values[i];
        }
        (px * d.1 - py * d.0) / denom
    }
}

/// An asymmetric norm on R^n in one of three concrete forms.
#[derive(Clone, Debug)]
pub enum NormForm {
    /// `||x|| = sqrt(x^T A x)`.
    Euclidean { a: SpdMatrix },
    /// `||x|| = sqrt(x^T A x) + <b, x>`.
    Randers { a: SpdMatrix, b: Vec<f64> },
    /// Dense directional samples with supporting-line interpolation (2D).
    Table(TableNorm),
}

#[derive(Clone, Debug)]
pub struct AsymmetricNorm {
    dim: usize,
    form: NormForm,
}

impl AsymmetricNorm {
    pub fn euclidean(a: SpdMatrix) -> Self {
        AsymmetricNorm { dim: a.dim(), form: NormForm::Euclidean { a } }
    }

    /// Standard Euclidean norm on R^dim.
    pub fn standard(dim: usize) -> Self {
        Self::euclidean(SpdMatrix::identity(dim))
    }

    pub fn randers(a: SpdMatrix, b: Vec<f64>) -> Result<Self, NormError> {
        if b.len() != a.dim() {
            return Err(NormError::BadMatrix);
        }
        let drift = a.inv_quad(&b);
        if drift >= 1.0 {
            return Err(NormError::InvalidRanders(drift));
        }
        Ok(AsymmetricNorm { dim: a.dim(), form: NormForm::Randers { a, b } })
    }

    /// Table norm from directional samples at `values.len()` uniform angles.
    pub fn table(values: Vec<f64>) -> Result<Self, NormError> {
        Ok(AsymmetricNorm { dim: 2, form: NormForm::Table(TableNorm::new(values)?) })
    }

    /// Table norm sampling a caller-supplied positively homogeneous function
    /// at [`TABLE_DIRECTIONS`] unit directions.
    pub fn table_from_fn(f: impl Fn(f64, f64) -> f64) -> Result<Self, NormError> {
        let m = TABLE_DIRECTIONS;
        let values = (0..m)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                f(th.cos(), th.sin())
            })
            .collect();
        Self::table(values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn form(&self) -> &NormForm {
        &self.form
    }

    /// Norm value at `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.form {
            NormForm::Euclidean { a } => a.quad(x).sqrt(),
            NormForm::Randers { a, b } => {
                a.quad(x).sqrt() + b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>()
            }
            NormForm::Table(t) => t.eval(x),
        }
    }

    /// Asymmetric distance `d(x, y) = ||y - x||`.
    pub fn asym_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi - xi).collect();
        self.evaluate(&diff)
    }

    /// Reversibility constant `sup_{v != 0} ||-v|| / ||v||`, by directional
    /// sweep with golden-section refinement (grid-zoom refinement in 3D).
    pub fn reversibility_constant(&self) -> f64 {
        match self.dim {
            1 => {
                let p = self.evaluate(&[1.0]);
                let n = self.evaluate(&[-1.0]);
                (n / p).max(p / n)
            }
            2 => {
                let ratio = |th: f64| {
                    let v = [th.cos(), th.sin()];
                    self.evaluate(&[-v[0], -v[1]]) / self.evaluate(&v)
                };
                let m = 4096;
                let step = 2.0 * std::f64::consts::PI / m as f64;
                let mut best = (0.0f64, f64::NEG_INFINITY);
                for i in 0..m {
                    let th = i as f64 * step;
                    let r = ratio(th);
                    if r > best.1 {
                        best = (th, r);
                    }
                }
                let (_, v) = golden_max(&ratio, best.0 - step, best.0 + step, 1e-12);
                v.max(best.1)
            }
            3 => {
                let ratio = |a: f64, b: f64| {
                    let v = [b.cos() * a.cos(), b.cos() * a.sin(), b.sin()];
                    self.evaluate(&[-v[0], -v[1], -v[2]]) / self.evaluate(&v)
                };
                let mut best = (0.0f64, 0.0f64, f64::NEG_INFINITY);
                let n = 96;
                for i in 0..(2 * n) {
                    let a = std::f64::consts::PI * i as f64 / n as f64;
                    for j in 0..=n {
                        let b = std::f64::consts::PI * (j as f64 / n as f64 - 0.5);
                        let r = ratio(a, b);
                        if r > best.2 {
                            best = (a, b, r);
                        }
                    }
                }
                // Iterative 5x5 zoom around the best cell.
                let mut wa = std::f64::consts::PI / n as f64;
                let mut wb = wa;
                let (mut ca, mut cb, mut cv) = best;
                for _ in 0..60 {
                    for i in -2i32..=2 {
                        for j in -2i32..=2 {
                            let a = ca + wa * i as f64 / 2.0;
                            let b = cb + wb * j as f64 / 2.0;
                            let r = ratio(a, b);
                            if r > cv {
                                ca = a;
                                cb = b;
                                cv = r;
                            }
                        }
                    }
                    wa *= 0.6;
                    wb *= 0.6;
                }
                cv
            }
            d => panic!("unsupported dimension {d}"),
        }
    }

    /// Two-step smoothing from a (possibly non-smooth) norm to a strongly
    /// convex Minkowski norm `||.||_eps` with
    /// `||x|| <= ||x||_eps <= (1 + eps) ||x||`, verified on a sweep of at
    /// least 10^4 directions. The internal `delta` is found by geometric
    /// halving from 0.5. Only implemented in the plane, where the output is
    /// representable as a directional table.
    pub fn smooth_norm(&self, eps: f64) -> Result<AsymmetricNorm, NormError> {
        assert!(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
        if self.dim != 2 {
            return Err(NormError::UnsupportedDimension(self.dim));
        }
        let quad = MollifierDiskRule::new(24, 64);
        let mut delta = 0.5f64;
        while delta > 1e-6 {
            let table = self.smoothed_table(delta, &quad);
            if let Ok(candidate) = AsymmetricNorm::table(table) {
                if self.sandwich_holds(&candidate, eps) {
                    return Ok(candidate);
                }
            }
            delta *= 0.5;
        }
        Err(NormError::ToleranceNotMet)
    }

    /// Directional mollification then strong convexification, sampled at
    /// table resolution: `||u||''_delta = sqrt((||u||'_delta)^2 + delta)`
    /// on unit vectors u, with
    /// `||u||'_delta = avg over the delta-disk of ||u - y||`.
    fn smoothed_table(&self, delta: f64, quad: &MollifierDiskRule) -> Vec<f64> {
        let m = TABLE_DIRECTIONS;
        (0..m)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                let u = [th.cos(), th.sin()];
                let s1 = quad.average(|y| self.evaluate(&[u[0] - y[0], u[1] - y[1]]), delta);
                (s1 * s1 + delta).sqrt()
            })
            .collect()
    }

    fn sandwich_holds(&self, candidate: &AsymmetricNorm, eps: f64) -> bool {
        let sweep = 10_000;
        for i in 0..sweep {
            let th = 2.0 * std::f64::consts::PI * i as f64 / sweep as f64;
            let v = [th.cos(), th.sin()];
            let base = self.evaluate(&v);
            let smooth = candidate.evaluate(&v);
            if smooth < base * (1.0 - 1e-9) || smooth > (1.0 + eps) * base * (1.0 + 1e-9) {
                return false;
            }
        }
        true
    }
}

/// Quadrature rule for averages against the rotationally symmetric bump
/// mollifier `exp(-1/(1-|y|^2))` on a disk: Gauss–Legendre in the radius,
/// uniform in the angle, with weights normalised to unit total mass so that
/// averaging a constant is exact.
struct MollifierDiskRule {
    // (radius in [0,1], angle, weight), weights summing to one.
    nodes: Vec<(f64, f64, f64)>,
}

impl MollifierDiskRule {
    fn new(n_radial: usize, n_angular: usize) -> Self {
        let bump = |r: f64| {
            if r >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - r * r)).exp()
            }
        };
        let gl = gauss_legendre(n_radial);
        let mut nodes = Vec::with_capacity(n_radial * n_angular);
        let mut total = 0.0;
        for &(x, w) in &gl {
            let r = 0.5 * (x + 1.0);
            let wr = 0.5 * w * bump(r) * r;
            for j in 0..n_angular {
                let a = 2.0 * std::f64::consts::PI * j as f64 / n_angular as f64;
                let wt = wr / n_angular as f64;
                nodes.push((r, a, wt));
                total += wt;
            }
        }
        for n in &mut nodes {
            n.2 /= total;
        }
        MollifierDiskRule { nodes }
    }

    /// Average of `f` over the mollifier scaled to radius `delta`.
    fn average(&self, f: impl Fn([f64; 2]) -> f64, delta: f64) -> f64 {
        self.nodes
            .iter()
            .map(|&(r, a, w)| w * f([delta * r * a.cos(), delta * r * a.sin()]))
            .sum()
    }
}

/// Finite-difference probe of boundary strong convexity for a planar norm:
/// minimum over a direction grid of the polar curvature expression
/// `r^2 + 2 r'^2 - r r''` of the unit-ball boundary `r(theta) = 1/||u(theta)||`.
/// Flat polygon edges give zero; strongly convex norms give a positive margin.
pub fn strong_convexity_margin(norm: &AsymmetricNorm) -> f64 {
    assert_eq!(norm.dim(), 2);
    let radius = |th: f64| 1.0 / norm.evaluate(&[th.cos(), th.sin()]);
    let m = 999;
    let h = 6.0 * 2.0 * std::f64::consts::PI / TABLE_DIRECTIONS as f64;
    let mut min = f64::INFINITY;
    for i in 0..m {
        let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
        let r0 = radius(th - h);
        let r1 = radius(th);
        let r2 = radius(th + h);
        let dr = (r2 - r0) / (2.0 * h);
        let ddr = (r2 - 2.0 * r1 + r0) / (h * h);
        min = min.min(r1 * r1 + 2.0 * dr * dr - r1 * ddr);
    }
    min
}

/// The weighted-circle structure of the one-dimensional rigidity case:
/// forward full-circle length `D`, reversibility `Lambda >= 1`, forward
/// speed `c1 = D`, backward speed `c2 = D / Lambda`, total mass one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleStructure {
    d: f64,
    lambda: f64,
}

impl CircleStructure {
    pub fn new(d: f64, lambda: f64) -> Self {
        assert!(d > 0.0, "circle length must be positive");
        assert!(lambda >= 1.0, "reversibility constant must be >= 1");
        CircleStructure { d, lambda }
    }

    pub fn diameter(&self) -> f64 {
        self.d
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn forward_speed(&self) -> f64 {
        self.d
    }

    pub fn backward_speed(&self) -> f64 {
        self.d / self.lambda
    }

    pub fn total_mass(&self) -> f64 {
        1.0
    }
}

/// Exact isoperimetric profile of the weighted circle, constant in the
/// volume fraction: `(1 + Lambda) / D`.
pub fn circle_boundary_rate(cs: &CircleStructure) -> f64 {
    (1.0 + cs.lambda()) / cs.diameter()
}

/// Normalisation constant of the bump mollifier on the unit interval,
/// `int_0^1 exp(-1/(1-(2t-1)^2)) dt`, used by the 1D smoothing in
/// `needle1d`; exposed here so both modules share one definition.
pub fn bump_mass_1d() -> f64 {
    adaptive_simpson(
        &|t: f64| {
            let u = 2.0 * t - 1.0;
            if u.abs() >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - u * u)).exp()
            }
        },
        0.0,
        1.0,
        1e-14,
    )
}
