//! End-to-end isoperimetric verification: profile estimation over
//! candidate families on concrete asymmetric spaces and certification of
//! the reversibility-weighted model lower bound.

mod bm;
mod spaces;

pub use bm::{
    check_brunn_minkowski_discrete, check_brunn_minkowski_line, BmReport, BmRow, LineWeight,
};
pub use spaces::{CircleGrid, RandersPlaneGrid};

use crate::localization::{solve_potential, FiniteAsymSpace, FlowError};
use crate::model_profiles::{bakry_ledoux_profile, levy_gromov_profile, Profile};
use crate::needle1d::{profile_1d, AsymLine, NeedleDensity};
use crate::norms::{AsymmetricNorm, CircleStructure, SpdMatrix};
use crate::parallel::par_map;
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IsoError {
    #[error("no candidate level attains mass {theta} within 1e-3 (best gap {gap})")]
    MassUnreachable { theta: f64, gap: f64 },
    #[error("candidate potential solve failed: {0}")]
    Flow(#[from] FlowError),
}

/// Epsilon schedule for boundary quotients, in grid steps.
pub const EPS_STEPS: [f64; 3] = [3.0, 5.0, 8.0];

/// Model branch the instance is compared against.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum ModelBranch {
    /// The one-dimensional circle case: the profile itself equals
    /// `(1 + Lambda)/D`, compared directly (no reversibility factor).
    CircleExact { d: f64, lambda: f64 },
    /// Sphere-type branch `I_{K,N,D}` with `K > 0`, `N in [n, inf)`.
    LevyGromov { k: f64, n: f64 },
    /// Gaussian branch `I_{K,inf,inf}` with `K > 0`.
    BakryLedoux { k: f64 },
}

/// A concrete space whose profile is estimated.
pub enum IsoSpace {
    Circle(CircleGrid),
    Plane(Box<RandersPlaneGrid>),
    Needle { rho: NeedleDensity, line: AsymLine },
}

pub struct IsoInstance {
    pub space: IsoSpace,
    pub lambda: f64,
    pub model: ModelBranch,
    /// Declared discretisation tolerance for margin flagging.
    pub tol_grid: f64,
}

impl IsoInstance {
    pub fn circle(cs: &CircleStructure, points: usize) -> Self {
        let rate = (1.0 + cs.lambda()) / cs.diameter();
        IsoInstance {
            space: IsoSpace::Circle(CircleGrid::new(cs, points)),
            lambda: cs.lambda(),
            model: ModelBranch::CircleExact { d: cs.diameter(), lambda: cs.lambda() },
            tol_grid: 0.02 * rate,
        }
    }

    /// Randers plane with Euclidean-Gaussian weight: the quadratic term of
    /// the log-density transfers to the norm with
    /// `K' = K inf_v |v|^2 / ||v||^2`.
    pub fn randers_gaussian_plane(drift: [f64; 2], k_gauss: f64, extent: f64, n: usize) -> Self {
        let norm = AsymmetricNorm::randers(SpdMatrix::identity(2), drift.to_vec())
            .expect("admissible Randers drift");
        let lambda = norm.reversibility_constant();
        let k_transfer = gaussian_norm_transfer_k(&norm, k_gauss);
        IsoInstance {
            space: IsoSpace::Plane(Box::new(RandersPlaneGrid::gaussian(
                norm, k_gauss, extent, n,
            ))),
            lambda,
            model: ModelBranch::BakryLedoux { k: k_transfer },
            tol_grid: 0.02,
        }
    }

    pub fn needle(rho: NeedleDensity, line: AsymLine, model: ModelBranch) -> Self {
        IsoInstance {
            lambda: line.reversibility(),
            space: IsoSpace::Needle { rho, line },
            model,
            tol_grid: 1e-6,
        }
    }

    /// Consistency of the declared reversibility constant with the
    /// observed distance asymmetry on sampled pairs.
    pub fn lambda_consistent(&self) -> bool {
        match &self.space {
            IsoSpace::Circle(cg) => {
                let a = cg.arc(0, 1);
                let d = cg.forward_distances(&a);
                let n = cg.len();
                let mut ok = true;
                for j in [1usize, 2, n / 4, n / 2, n - 2, n - 1] {
                    let mut src = vec![false; n];
                    src[j] = true;
                    let back = cg.forward_distances(&src)[0];
                    let fwd = d[j];
                    let ratio = (fwd / back).max(back / fwd);
                    ok &= ratio <= self.lambda + 1e-6;
                }
                ok
            }
            IsoSpace::Plane(grid) => {
                let mut worst = 1.0f64;
                for t in 0..512 {
                    let th = 2.0 * std::f64::consts::PI * t as f64 / 512.0;
                    let v = [th.cos(), th.sin()];
                    let r = grid.norm().evaluate(&[-v[0], -v[1]]) / grid.norm().evaluate(&v);
                    worst = worst.max(r);
                }
                worst <= self.lambda + 1e-6
            }
            IsoSpace::Needle { line, .. } => line.reversibility() <= self.lambda + 1e-6,
        }
    }
}

/// `K' = K inf_v |v|^2 / ||v||^2` by directional sweep.
pub fn gaussian_norm_transfer_k(norm: &AsymmetricNorm, k: f64) -> f64 {
    let mut inf = f64::INFINITY;
    for t in 0..4096 {
        let th = 2.0 * std::f64::consts::PI * t as f64 / 4096.0;
        let v = [th.cos(), th.sin()];
        let nv = norm.evaluate(&v);
        inf = inf.min(1.0 / (nv * nv));
    }
    k * inf
}

/// Least-squares fit of `q = a + b eps`; returns the extrapolated `a`.
fn richardson(eps: &[f64], q: &[f64]) -> f64 {
    let n = eps.len() as f64;
    let se: f64 = eps.iter().sum();
    let sq: f64 = q.iter().sum();
    let see: f64 = eps.iter().map(|e| e * e).sum();
    let seq: f64 = eps.iter().zip(q).map(|(e, v)| e * v).sum();
    let denom = n * see - se * se;
    if denom.abs() < 1e-30 {
        return sq / n;
    }
    let b = (n * seq - se * sq) / denom;
    (sq - b * se) / n
}

/// Forward Minkowski boundary quotient on a dense finite space:
/// `(m(B+(A, eps)) - m(A))/eps` with the forward ball found by
/// multi-source Dijkstra over the complete digraph.
pub fn forward_boundary(space: &FiniteAsymSpace, a: &[usize], eps: f64) -> f64 {
    assert!(eps > 0.0);
    let n = space.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let key = |d: f64| d.to_bits();
    for &v in a {
        dist[v] = 0.0;
        heap.push(Reverse((key(0.0), v)));
    }
    while let Some(Reverse((kd, u))) = heap.pop() {
        let du = f64::from_bits(kd);
        if du > dist[u] {
            continue;
        }
        for v in 0..n {
            if v != u && du + space.dist(u, v) < dist[v] {
                dist[v] = du + space.dist(u, v);
                heap.push(Reverse((key(dist[v]), v)));
            }
        }
    }
    let ball: f64 = (0..n).filter(|&v| dist[v] <= eps).map(|v| space.weight(v)).sum();
    let mass: f64 = a.iter().map(|&v| space.weight(v)).sum();
    (ball - mass) / eps
}

/// Candidate family switches for profile estimation. Circle and needle
/// instances have a single natural family (arcs, intervals) and ignore
/// the plane-specific switches.
#[derive(Clone, Copy, Debug)]
pub struct CandidateFamilies {
    pub half_spaces: bool,
    pub forward_balls: bool,
    pub potential_sublevels: bool,
}

impl Default for CandidateFamilies {
    fn default() -> Self {
        CandidateFamilies { half_spaces: true, forward_balls: true, potential_sublevels: true }
    }
}

impl CandidateFamilies {
    pub fn is_empty(&self) -> bool {
        !(self.half_spaces || self.forward_balls || self.potential_sublevels)
    }
}

/// A scalar candidate field on the plane grid with its sorted sublevel
/// order; candidate sets are sublevel sets at mass-attaining levels.
struct CandidateField {
    name: &'static str,
    order: Vec<usize>,
    cum: Vec<f64>,
}

impl CandidateField {
    fn new(name: &'static str, g: &[f64], weights: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..g.len()).collect();
        order.sort_by(|&a, &b| g[a].partial_cmp(&g[b]).unwrap().then(a.cmp(&b)));
        let mut cum = Vec::with_capacity(order.len());
        let mut acc = 0.0;
        for &idx in &order {
            acc += weights[idx];
            cum.push(acc);
        }
        CandidateField { name, order, cum }
    }

    /// Smallest sublevel prefix with mass at least `theta`; the attained
    /// mass is returned with the indicator.
    fn set_for_mass(&self, theta: f64, len: usize) -> (Vec<bool>, f64) {
        let k = self.cum.partition_point(|&c| c < theta);
        let k = k.min(self.cum.len() - 1);
        let mut a = vec![false; len];
        for &idx in &self.order[..=k] {
            a[idx] = true;
        }
        (a, self.cum[k])
    }
}

/// Estimates the isoperimetric profile with the default candidate family.
pub fn estimate_profile(inst: &IsoInstance, thetas: &[f64]) -> Result<Profile, IsoError> {
    estimate_profile_with(inst, thetas, &CandidateFamilies::default())
}

/// Estimates the isoperimetric profile of the instance on a theta grid:
/// per theta, every candidate shape is levelled to the target mass, its
/// boundary quotient evaluated on the epsilon schedule and Richardson
/// extrapolated; the family minimum is returned. Enlarging the candidate
/// family can only decrease the values.
pub fn estimate_profile_with(
    inst: &IsoInstance,
    thetas: &[f64],
    families: &CandidateFamilies,
) -> Result<Profile, IsoError> {
    assert!(!families.is_empty(), "candidate family must be nonempty");
    let values = match &inst.space {
        IsoSpace::Circle(cg) => {
            let n = cg.len();
            let eps_list: Vec<f64> = EPS_STEPS.iter().map(|&s| s * cg.step_fwd()).collect();
            let jobs: Vec<f64> = thetas.to_vec();
            let results = par_map(&jobs, |&theta| {
                let k = (theta * n as f64).round() as usize;
                let gap = (k as f64 / n as f64 - theta).abs();
                if gap > 1e-3 {
                    return Err(IsoError::MassUnreachable { theta, gap });
                }
                let a = cg.arc(0, k.max(1));
                let qs: Vec<f64> =
                    eps_list.iter().map(|&e| cg.forward_boundary(&a, e)).collect();
                Ok(richardson(&eps_list, &qs))
            });
            results.into_iter().collect::<Result<Vec<f64>, IsoError>>()?
        }
        IsoSpace::Plane(grid) => {
            let fields = plane_candidates(grid, families)?;
            let h = grid.spacing();
            let eps_list: Vec<f64> = EPS_STEPS.iter().map(|&s| s * h).collect();
            let mut values = Vec::with_capacity(thetas.len());
            for &theta in thetas {
                let per_candidate = par_map(&fields, |field| {
                    let (a, mass) = field.set_for_mass(theta, grid.len());
                    if (mass - theta).abs() > 1e-3 {
                        return (field.name, f64::INFINITY, mass);
                    }
                    let qs = grid.forward_boundary_multi(&a, &eps_list);
                    (field.name, richardson(&eps_list, &qs), mass)
                });
                let mut best = f64::INFINITY;
                let mut best_gap = f64::INFINITY;
                for (_, v, mass) in &per_candidate {
                    best = best.min(*v);
                    best_gap = best_gap.min((mass - theta).abs());
                }
                if !best.is_finite() {
                    return Err(IsoError::MassUnreachable { theta, gap: best_gap });
                }
                values.push(best);
            }
            values
        }
        IsoSpace::Needle { rho, line } => {
            thetas.iter().map(|&t| profile_1d(rho, line, t)).collect()
        }
    };
    Ok(Profile { thetas: thetas.to_vec(), values })
}

/// Candidate fields on the plane: half-spaces over a direction fan,
/// forward norm balls around a centre sweep, and sublevel sets of coarse
/// solved potentials (inf-extended to the fine grid).
fn plane_candidates(
    grid: &RandersPlaneGrid,
    families: &CandidateFamilies,
) -> Result<Vec<CandidateField>, IsoError> {
    let len = grid.len();
    let weights = grid.weights();
    let mut fields = Vec::new();
    if families.half_spaces {
        for t in 0..16 {
            let th = 2.0 * std::f64::consts::PI * t as f64 / 16.0;
            let u = [th.cos(), th.sin()];
            let g: Vec<f64> =
                (0..len).map(|i| u[0] * grid.point(i)[0] + u[1] * grid.point(i)[1]).collect();
            fields.push(CandidateField::new("half-space", &g, weights));
        }
    }
    if families.forward_balls {
        for centre in [[0.0, 0.0], [0.75, 0.0], [-0.75, 0.0], [0.0, 0.75], [0.0, -0.75]] {
            let g: Vec<f64> = (0..len)
                .map(|i| {
                    let p = grid.point(i);
                    grid.norm().evaluate(&[p[0] - centre[0], p[1] - centre[1]])
                })
                .collect();
            fields.push(CandidateField::new("forward-ball", &g, weights));
        }
    }
    if families.potential_sublevels {
        for phi in coarse_potentials(grid)? {
            let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
            fields.push(CandidateField::new("potential-sublevel", &phi, weights));
            fields.push(CandidateField::new("potential-superlevel", &neg, weights));
        }
    }
    Ok(fields)
}

/// Solves mean-zero problems on a coarse subgrid and inf-extends the dual
/// potentials to 1-Lipschitz fields on the fine grid.
fn coarse_potentials(grid: &RandersPlaneGrid) -> Result<Vec<Vec<f64>>, IsoError> {
    let len = grid.len();
    let side = (len as f64).sqrt().round() as usize;
    let target = 21usize.min(side);
    let stride = side.div_ceil(target);
    let mut coarse_idx = Vec::new();
    for j in (0..side).step_by(stride) {
        for i in (0..side).step_by(stride) {
            coarse_idx.push(j * side + i);
        }
    }
    let nc = coarse_idx.len();
    let pts: Vec<[f64; 2]> = coarse_idx.iter().map(|&i| grid.point(i)).collect();
    let mut d = vec![vec![0.0; nc]; nc];
    for a in 0..nc {
        for b in 0..nc {
            if a != b {
                d[a][b] = grid
                    .norm()
                    .evaluate(&[pts[b][0] - pts[a][0], pts[b][1] - pts[a][1]]);
            }
        }
    }
    let m: Vec<f64> = coarse_idx.iter().map(|&i| grid.weights()[i]).collect();
    let space = FiniteAsymSpace::from_matrix(d, m.clone()).expect("norm metric is triangular");
    let total: f64 = m.iter().sum();
    let mut out = Vec::new();
    let shapes: [Box<dyn Fn(&[f64; 2]) -> f64>; 2] = [
        Box::new(|p: &[f64; 2]| p[0]),
        Box::new(|p: &[f64; 2]| (p[0] * p[0] + p[1] * p[1]).sqrt()),
    ];
    for shape in &shapes {
        let raw: Vec<f64> = pts.iter().map(shape).collect();
        let mean: f64 = raw.iter().zip(&m).map(|(r, w)| r * w).sum::<f64>() / total;
        let f: Vec<f64> = raw.iter().map(|r| r - mean).collect();
        let sol = solve_potential(&space, &f)?;
        // Inf-extension keeps the 1-Lipschitz property on the fine grid.
        let extended: Vec<f64> = (0..len)
            .map(|i| {
                let y = grid.point(i);
                let mut best = f64::INFINITY;
                for (c, p) in pts.iter().enumerate() {
                    let v = sol.phi[c] + grid.norm().evaluate(&[y[0] - p[0], y[1] - p[1]]);
                    if v < best {
                        best = v;
                    }
                }
                best
            })
            .collect();
        out.push(extended);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginRow {
    pub theta: f64,
    pub estimate: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginReport {
    pub rows: Vec<MarginRow>,
    pub flagged: usize,
    pub tol_grid: f64,
    pub lambda: f64,
}

/// Margins of the estimated profile against the reversibility-weighted
/// model bound `Lambda^{-1} I_{K,N,D}` (the circle branch compares against
/// its own exact constant). Rows with `margin < -tol_grid` are flagged.
pub fn verify_main_inequality(inst: &IsoInstance, profile: &Profile) -> MarginReport {
    let mut rows = Vec::with_capacity(profile.thetas.len());
    let mut flagged = 0usize;
    for (&theta, &est) in profile.thetas.iter().zip(&profile.values) {
        let bound = match inst.model {
            ModelBranch::CircleExact { d, lambda } => (1.0 + lambda) / d,
            ModelBranch::LevyGromov { k, n } => {
                levy_gromov_profile(k, n, theta) / inst.lambda
            }
            ModelBranch::BakryLedoux { k } => bakry_ledoux_profile(k, theta) / inst.lambda,
        };
        let margin = est - bound;
        if margin < -inst.tol_grid {
            flagged += 1;
        }
        rows.push(MarginRow { theta, estimate: est, bound, margin });
    }
    MarginReport { rows, flagged, tol_grid: inst.tol_grid, lambda: inst.lambda }
}
