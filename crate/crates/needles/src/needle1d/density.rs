//! Probability densities on intervals: the needle objects. A density is
//! immutable after construction; the normalising mass and CDF/quantile
//! tables are built eagerly.

use crate::comparison::{CdParams, EffectiveDim};
use crate::numerics::gauss_legendre;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("density cannot be normalised: {0}")]
    NotNormalizable(String),
    #[error("invalid domain: {0}")]
    BadDomain(String),
    #[error("sampled-grid densities are not differentiable")]
    NonSmoothDensity,
    #[error("mollified mass is not finite")]
    MassDiverged,
    #[error("CDF is not strictly increasing on the support interior")]
    QuantileFailure,
    #[error("effective dimension N = {0} is not admissible here")]
    BadDimension(f64),
    #[error("intervals overlap")]
    OverlappingIntervals,
}

/// Convolution branch of the smoothing lemma: power mean with exponent
/// `1/(N-1)` for finite `N`, log mean for `N = inf`. `N = 0` is the
/// harmonic-mean case `e = -1` of the power branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MollifyBranch {
    Power { e: f64 },
    Log,
}

#[derive(Clone, Debug)]
pub enum DensityForm {
    /// Constant density on a bounded interval.
    Uniform,
    /// `rho(t) ~ s(t - origin)^exponent` where `s'' + kappa s = 0`,
    /// `s(u) = a_coef * ck(u) + b_coef * sk(u)` (cos/cosh and sin/sinh type).
    JacobiPower {
        kappa: f64,
        a_coef: f64,
        b_coef: f64,
        exponent: f64,
        origin: f64,
    },
    /// `rho(t) ~ exp(-k (t - center)^2 / 2)`.
    Gaussian { k: f64, center: f64 },
    /// `rho(t) ~ exp(-rate (t - lo))` (exponential tilt).
    ExpTilt { rate: f64 },
    /// Sampled values with linear interpolation, zero outside.
    Grid { xs: Vec<f64>, ys: Vec<f64> },
    /// One-sided bump-mollified version of `base` with lag support `[0, eps]`.
    Mollified {
        base: Box<NeedleDensity>,
        eps: f64,
        branch: MollifyBranch,
        /// Discretised mollifier: lags and weights summing to one.
        nodes: Vec<(f64, f64)>,
    },
}

/// Number of cells in the cached CDF table.
pub const CDF_CELLS: usize = 20_000;
/// Quantile truncation applied to unbounded domains.
pub const TAIL_QUANTILE: f64 = 1e-9;

/// A probability density on a closed interval (endpoints may be infinite
/// when the tails are integrable), with evaluation, CDF and quantile access.
#[derive(Clone, Debug)]
pub struct NeedleDensity {
    domain: (f64, f64),
    lo: f64,
    hi: f64,
    form: DensityForm,
    mass: f64,
    cdf_xs: Vec<f64>,
    cdf_vals: Vec<f64>,
}

fn jacobi_sol(kappa: f64, a_coef: f64, b_coef: f64, u: f64) -> f64 {
    if kappa > 0.0 {
        let s = kappa.sqrt();
        a_coef * (s * u).cos() + b_coef * (s * u).sin()
    } else if kappa == 0.0 {
        a_coef + b_coef * u
    } else {
        let s = (-kappa).sqrt();
        a_coef * (s * u).cosh() + b_coef * (s * u).sinh()
    }
}

fn jacobi_deriv(kappa: f64, a_coef: f64, b_coef: f64, u: f64) -> f64 {
    if kappa > 0.0 {
        let s = kappa.sqrt();
        -a_coef * s * (s * u).sin() + b_coef * s * (s * u).cos()
    } else if kappa == 0.0 {
        b_coef
    } else {
        let s = (-kappa).sqrt();
        a_coef * s * (s * u).sinh() + b_coef * s * (s * u).cosh()
    }
}

impl NeedleDensity {
    pub fn uniform(a: f64, b: f64) -> Result<Self, DensityError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(DensityError::BadDomain("uniform needs a finite interval".into()));
        }
        Self::build((a, b), DensityForm::Uniform)
    }

    /// Standard Gaussian model density `~ exp(-k t^2 / 2)` on the real line.
    pub fn gaussian(k: f64) -> Result<Self, DensityError> {
        Self::gaussian_centered(k, 0.0)
    }

    pub fn gaussian_centered(k: f64, center: f64) -> Result<Self, DensityError> {
        if !(k > 0.0) {
            return Err(DensityError::NotNormalizable("gaussian needs k > 0".into()));
        }
        Self::build(
            (f64::NEG_INFINITY, f64::INFINITY),
            DensityForm::Gaussian { k, center },
        )
    }

    /// Gaussian weight restricted to a window (used by model families).
    pub fn gaussian_window(k: f64, center: f64, lo: f64, hi: f64) -> Result<Self, DensityError> {
        if !(lo < hi) {
            return Err(DensityError::BadDomain("window must be nonempty".into()));
        }
        Self::build((lo, hi), DensityForm::Gaussian { k, center })
    }

    /// `rho ~ sin(sqrt(kappa) t)^exponent` on its full positivity window
    /// `[0, pi / sqrt(kappa)]`.
    pub fn sin_power(kappa: f64, exponent: f64) -> Result<Self, DensityError> {
        if !(kappa > 0.0) {
            return Err(DensityError::BadDomain("sin_power needs kappa > 0".into()));
        }
        let len = std::f64::consts::PI / kappa.sqrt();
        Self::jacobi_power(kappa, 0.0, 1.0, exponent, 0.0, (0.0, len))
    }

    /// General Jacobi-power density on an explicit domain.
    pub fn jacobi_power(
        kappa: f64,
        a_coef: f64,
        b_coef: f64,
        exponent: f64,
        origin: f64,
        domain: (f64, f64),
    ) -> Result<Self, DensityError> {
        if !(domain.0 < domain.1) {
            return Err(DensityError::BadDomain("empty domain".into()));
        }
        let form = DensityForm::JacobiPower { kappa, a_coef, b_coef, exponent, origin };
        if domain.0.is_finite() && domain.1.is_finite() {
            // Positivity of the base solution on the (closed or open, by
            // exponent sign) domain.
            let need_closed = exponent < 0.0;
            let samples = 512;
            for i in 0..=samples {
                let t = domain.0 + (domain.1 - domain.0) * i as f64 / samples as f64;
                let interior = i > 0 && i < samples;
                let s = jacobi_sol(kappa, a_coef, b_coef, t - origin);
                if (interior || need_closed) && s <= 0.0 {
                    return Err(DensityError::NotNormalizable(
                        "base solution is not positive on the domain".into(),
                    ));
                }
            }
        }
        Self::build(domain, form)
    }

    /// Exponential tilt `rho ~ exp(-rate (t - lo))`; `hi` may be infinite
    /// when `rate > 0`.
    pub fn exp_tilt(rate: f64, lo: f64, hi: f64) -> Result<Self, DensityError> {
        if !lo.is_finite() || !(lo < hi) {
            return Err(DensityError::BadDomain("exp_tilt needs a finite left end".into()));
        }
        if hi.is_infinite() && rate <= 0.0 {
            return Err(DensityError::NotNormalizable("non-decaying tilt on a half-line".into()));
        }
        Self::build((lo, hi), DensityForm::ExpTilt { rate })
    }

    /// Piecewise-linear density through `(xs, ys)`; zero outside.
    pub fn from_grid(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, DensityError> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(DensityError::BadDomain("grid needs at least two samples".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DensityError::BadDomain("grid abscissae must increase".into()));
        }
        if ys.iter().any(|&y| y < 0.0 || !y.is_finite()) {
            return Err(DensityError::NotNormalizable("grid values must be nonnegative".into()));
        }
        let domain = (xs[0], *xs.last().unwrap());
        Self::build(domain, DensityForm::Grid { xs, ys })
    }

    fn build(domain: (f64, f64), form: DensityForm) -> Result<Self, DensityError> {
        let (lo, hi) = working_bounds(domain, &form)?;
        let mut d = NeedleDensity {
            domain,
            lo,
            hi,
            form,
            mass: 1.0,
            cdf_xs: Vec::new(),
            cdf_vals: Vec::new(),
        };
        d.tabulate()?;
        Ok(d)
    }

    /// Raw (unnormalised) density value.
    fn raw(&self, t: f64) -> f64 {
        if t < self.domain.0 || t > self.domain.1 {
            return 0.0;
        }
        match &self.form {
            DensityForm::Uniform => 1.0,
            DensityForm::JacobiPower { kappa, a_coef, b_coef, exponent, origin } => {
                let s = jacobi_sol(*kappa, *a_coef, *b_coef, t - origin);
                if s <= 0.0 {
                    if *exponent < 0.0 {
                        f64::INFINITY
                    } else if *exponent == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    s.powf(*exponent)
                }
            }
            DensityForm::Gaussian { k, center } => (-0.5 * k * (t - center) * (t - center)).exp(),
            DensityForm::ExpTilt { rate } => (-rate * (t - self.domain.0)).exp(),
            DensityForm::Grid { xs, ys } => grid_interp(xs, ys, t),
            DensityForm::Mollified { base, branch, nodes, .. } => match branch {
                MollifyBranch::Power { e } => {
                    let mut acc = 0.0;
                    for &(s, w) in nodes {
                        let v = base.eval(t - s);
                        if v <= 0.0 {
                            if *e < 0.0 {
                                return 0.0;
                            }
                            continue;
                        }
                        acc += w * v.powf(*e);
                    }
                    if acc <= 0.0 {
                        0.0
                    } else {
                        acc.powf(1.0 / *e)
                    }
                }
                MollifyBranch::Log => {
                    let mut acc = 0.0;
                    for &(s, w) in nodes {
                        let v = base.eval(t - s);
                        if v <= 0.0 {
                            return 0.0;
                        }
                        acc += w * v.ln();
                    }
                    acc.exp()
                }
            },
        }
    }

    /// Normalised density value.
    pub fn eval(&self, t: f64) -> f64 {
        self.raw(t) / self.mass
    }

    /// `ln` of the normalised density, computed in closed form where the
    /// representation allows.
    pub fn log_eval(&self, t: f64) -> f64 {
        if t < self.domain.0 || t > self.domain.1 {
            return f64::NEG_INFINITY;
        }
        let raw_log = match &self.form {
            DensityForm::Uniform => 0.0,
            DensityForm::Gaussian { k, center } => -0.5 * k * (t - center) * (t - center),
            DensityForm::ExpTilt { rate } => -rate * (t - self.domain.0),
            DensityForm::JacobiPower { kappa, a_coef, b_coef, exponent, origin } => {
                let s = jacobi_sol(*kappa, *a_coef, *b_coef, t - origin);
                if s <= 0.0 {
                    return if *exponent < 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
                }
                exponent * s.ln()
            }
            DensityForm::Mollified { base, branch: MollifyBranch::Log, nodes, .. } => {
                let mut acc = 0.0;
                for &(s, w) in nodes {
                    let l = base.log_eval(t - s);
                    if l == f64::NEG_INFINITY {
                        return f64::NEG_INFINITY;
                    }
                    acc += w * l;
                }
                acc
            }
            _ => {
                let v = self.raw(t);
                if v <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                return v.ln() - self.mass.ln();
            }
        };
        raw_log - self.mass.ln()
    }

    /// First and second derivatives of `log rho` in closed form, when the
    /// representation has them (everything except sampled grids and
    /// mollified forms).
    pub fn log_derivs(&self, t: f64) -> Option<(f64, f64)> {
        if t < self.domain.0 || t > self.domain.1 {
            return None;
        }
        match &self.form {
            DensityForm::Uniform => Some((0.0, 0.0)),
            DensityForm::Gaussian { k, center } => Some((-k * (t - center), -k)),
            DensityForm::ExpTilt { rate } => Some((-rate, 0.0)),
            DensityForm::JacobiPower { kappa, a_coef, b_coef, exponent, origin } => {
                let u = t - origin;
                let s = jacobi_sol(*kappa, *a_coef, *b_coef, u);
                if s <= 0.0 {
                    return None;
                }
                let sp = jacobi_deriv(*kappa, *a_coef, *b_coef, u);
                let ratio = sp / s;
                // (ln s)'' = s''/s - (s'/s)^2 with s'' = -kappa s.
                Some((exponent * ratio, exponent * (-kappa - ratio * ratio)))
            }
            _ => None,
        }
    }

    /// Logical domain; endpoints may be infinite.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Finite working bounds (unbounded tails truncated at [`TAIL_QUANTILE`]).
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Range on which pointwise checks are meaningful. For mollified
    /// densities this is the full-window region `[a + eps, b]` of the base
    /// support, where the smoothing lemma's inequality is actually provable;
    /// within `eps` of a support endpoint the convolution window crosses the
    /// edge and the inequality genuinely fails for densities positive there.
    pub fn reliable_range(&self) -> (f64, f64) {
        match &self.form {
            DensityForm::Mollified { base, eps, .. } => {
                let (blo, bhi) = base.domain;
                let lo = if blo.is_finite() { blo + eps } else { self.lo };
                let hi = if bhi.is_finite() { bhi } else { self.hi };
                (lo.max(self.lo), hi.min(self.hi))
            }
            _ => (self.lo, self.hi),
        }
    }

    /// Mass of the raw form before normalisation (`m_{N,eps}` for mollified
    /// densities built from a normalised base).
    pub fn raw_mass(&self) -> f64 {
        self.mass
    }

    pub fn form(&self) -> &DensityForm {
        &self.form
    }

    /// Distribution function of the normalised density.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= self.lo {
            return 0.0;
        }
        if t >= self.hi {
            return 1.0;
        }
        let n = self.cdf_xs.len() - 1;
        let step = (self.hi - self.lo) / n as f64;
        let mut i = ((t - self.lo) / step) as usize;
        if i >= n {
            i = n - 1;
        }
        let x0 = self.cdf_xs[i];
        let extra = cell_integral(&|u| self.raw(u), x0, t) / self.mass;
        (self.cdf_vals[i] + extra).clamp(0.0, 1.0)
    }

    fn bracket_cell(&self, q: f64) -> usize {
        let vals = &self.cdf_vals;
        let mut lo = 0usize;
        let mut hi = vals.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if vals[mid] <= q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Table-resolution quantile: linear inversion of the cached CDF, with
    /// no in-cell refinement. Used by scan loops; accuracy is one table
    /// cell.
    pub fn quantile_coarse(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return self.lo;
        }
        if q >= 1.0 {
            return self.hi;
        }
        let i = self.bracket_cell(q);
        let (v0, v1) = (self.cdf_vals[i], self.cdf_vals[i + 1]);
        let w = if v1 > v0 { (q - v0) / (v1 - v0) } else { 0.5 };
        self.cdf_xs[i] * (1.0 - w) + self.cdf_xs[i + 1] * w
    }

    /// Quantile of the normalised density: the smallest `t` with
    /// `cdf(t) = q`, refined inside the bracketing table cell by safeguarded
    /// Newton steps.
    pub fn quantile(&self, q: f64) -> f64 {
        assert!((0.0..=1.0).contains(&q), "quantile needs q in [0,1]");
        if q <= 0.0 {
            return self.lo;
        }
        if q >= 1.0 {
            return self.hi;
        }
        let i = self.bracket_cell(q);
        let mut a = self.cdf_xs[i];
        let mut b = self.cdf_xs[i + 1];
        // CDF value at the moving left bracket.
        let mut fa = self.cdf_vals[i];
        let xtol = 1e-14 * (self.hi - self.lo).abs().max(1.0);
        let mut x = self.quantile_coarse(q).clamp(a, b);
        for _ in 0..40 {
            if b - a <= xtol {
                break;
            }
            let fx = fa + cell_integral(&|u| self.raw(u), a, x) / self.mass;
            if fx <= q {
                a = x;
                fa = fx;
            } else {
                b = x;
            }
            let dens = self.eval(x);
            let mut next = if dens > 0.0 { x - (fx - q) / dens } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= xtol {
                return next;
            }
            x = next;
        }
        0.5 * (a + b)
    }

    /// One-sided mollification with renormalisation: the power-mean
    /// convolution `(rho^{1/(N-1)} * phi_eps)^{N-1}` for finite `N` (the
    /// harmonic-mean branch at `N = 0`), `exp(log rho * phi_eps)` at
    /// `N = inf`, then division by the resulting mass.
    pub fn mollify(&self, params: &CdParams, eps: f64) -> Result<NeedleDensity, DensityError> {
        assert!(eps > 0.0, "mollify needs eps > 0");
        let branch = match params.n_eff() {
            EffectiveDim::Infinite => MollifyBranch::Log,
            EffectiveDim::Finite(n) if n != 1.0 => MollifyBranch::Power { e: 1.0 / (n - 1.0) },
            EffectiveDim::Finite(n) => return Err(DensityError::BadDimension(n)),
        };
        let nodes = mollifier_nodes(eps);
        let grows_right = matches!(branch, MollifyBranch::Power { e } if e > 0.0);
        let domain = if self.domain.0.is_finite() || self.domain.1.is_finite() {
            if grows_right {
                (self.domain.0, self.domain.1 + eps)
            } else {
                ((self.domain.0 + eps).min(self.domain.1), self.domain.1)
            }
        } else {
            self.domain
        };
        let form = DensityForm::Mollified {
            base: Box::new(self.clone()),
            eps,
            branch,
            nodes,
        };
        let built = Self::build(domain, form);
        match built {
            Ok(d) if d.mass.is_finite() && d.mass > 0.0 => Ok(d),
            Ok(_) => Err(DensityError::MassDiverged),
            Err(DensityError::NotNormalizable(_)) => Err(DensityError::MassDiverged),
            Err(e) => Err(e),
        }
    }

    fn tabulate(&mut self) -> Result<(), DensityError> {
        let n = CDF_CELLS;
        let (lo, hi) = (self.lo, self.hi);
        let mut xs = Vec::with_capacity(n + 1);
        let mut vals = Vec::with_capacity(n + 1);
        xs.push(lo);
        vals.push(0.0);
        let step = (hi - lo) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let a = lo + step * i as f64;
            let b = if i == n - 1 { hi } else { lo + step * (i + 1) as f64 };
            acc += cell_integral(&|u| self.raw(u), a, b);
            xs.push(b);
            vals.push(acc);
        }
        if !acc.is_finite() || acc <= 0.0 {
            return Err(DensityError::NotNormalizable(format!(
                "total mass {acc} is not a positive finite number"
            )));
        }
        self.mass = acc;
        for v in &mut vals {
            *v /= acc;
        }
        self.cdf_xs = xs;
        self.cdf_vals = vals;
        Ok(())
    }
}

/// Composite Simpson over one short cell (two panels).
fn cell_integral(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let q1 = (m - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + m)) + f(m));
    let q2 = (b - m) / 6.0 * (f(m) + 4.0 * f(0.5 * (m + b)) + f(b));
    q1 + q2
}

fn grid_interp(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    if t < xs[0] || t > *xs.last().unwrap() {
        return 0.0;
    }
    let mut lo = 0usize;
    let mut hi = xs.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = (t - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] * (1.0 - w) + ys[hi] * w
}

/// Finite working bounds: quantile-level truncation of unbounded tails.
fn working_bounds(domain: (f64, f64), form: &DensityForm) -> Result<(f64, f64), DensityError> {
    let (a, b) = domain;
    if a.is_finite() && b.is_finite() {
        return Ok((a, b));
    }
    match form {
        DensityForm::Gaussian { k, center } => {
            // Standard normal quantile of TAIL_QUANTILE is about -5.998.
            let z = crate::numerics::normal_quantile(1.0 - TAIL_QUANTILE);
            let s = (1.0 / k).sqrt();
            let lo = if a.is_finite() { a } else { center - z * s };
            let hi = if b.is_finite() { b } else { center + z * s };
            Ok((lo.max(a), hi.min(b)))
        }
        DensityForm::ExpTilt { rate } => {
            if b.is_infinite() {
                Ok((a, a - (TAIL_QUANTILE.ln()) / rate))
            } else {
                Ok((a, b))
            }
        }
        DensityForm::JacobiPower { kappa, exponent, .. } => {
            // Integrable infinite tails only for decaying cosh/sinh powers.
            if *kappa < 0.0 && *exponent < -1.0 {
                let decay = -exponent * (-kappa).sqrt();
                let reach = -(TAIL_QUANTILE.ln()) / decay + 5.0;
                let lo = if a.is_finite() { a } else { -reach };
                let hi = if b.is_finite() { b } else { reach };
                Ok((lo, hi))
            } else {
                Err(DensityError::NotNormalizable(
                    "unbounded Jacobi-power domain with non-decaying tails".into(),
                ))
            }
        }
        DensityForm::Mollified { base, eps, branch, .. } => {
            let (blo, bhi) = base.support();
            if matches!(branch, MollifyBranch::Power { e } if *e > 0.0) {
                Ok((blo, bhi + eps))
            } else {
                Ok((blo + eps, bhi))
            }
        }
        _ => Err(DensityError::BadDomain("unbounded domain for this form".into())),
    }
}

/// Discretised bump mollifier on `[0, eps]`: Gauss–Legendre abscissae with
/// weights proportional to `exp(-1/(1-(2u-1)^2))`, normalised to total mass
/// one so that smoothing a constant is exact.
fn mollifier_nodes(eps: f64) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(64);
    let mut nodes: Vec<(f64, f64)> = gl
        .iter()
        .map(|&(x, w)| {
            let u = 0.5 * (x + 1.0);
            let v = 2.0 * u - 1.0;
            let bump = if v.abs() >= 1.0 { 0.0 } else { (-1.0 / (1.0 - v * v)).exp() };
            (eps * u, w * bump)
        })
        .collect();
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    nodes
}

/// The asymmetric line: `d(s, t) = t - s` forward and
/// `d(t, s) = lambda_b (t - s)` backward, for `t >= s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymLine {
    backward_factor: f64,
}

impl AsymLine {
    pub fn new(backward_factor: f64) -> Self {
        assert!(backward_factor > 0.0, "backward factor must be positive");
        AsymLine { backward_factor }
    }

    pub fn symmetric() -> Self {
        AsymLine { backward_factor: 1.0 }
    }

    pub fn backward_factor(&self) -> f64 {
        self.backward_factor
    }

    pub fn dist(&self, from: f64, to: f64) -> f64 {
        if to >= from {
            to - from
        } else {
            self.backward_factor * (from - to)
        }
    }

    /// Induced reversibility constant `max(lambda_b, 1/lambda_b)`.
    pub fn reversibility(&self) -> f64 {
        self.backward_factor.max(1.0 / self.backward_factor)
    }
}
