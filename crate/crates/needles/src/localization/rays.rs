//! Tight graphs, their transitive skeletons, and the extraction of maximal
//! transport rays with the D/T/B partition and the disintegration weights.

use super::space::FiniteAsymSpace;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RayError {
    #[error("point {point} is interior to two distinct maximal chains")]
    AmbiguousInterior { point: usize },
}

/// Directed graph of tight pairs reduced to its transitive skeleton.
#[derive(Clone, Debug, Default)]
pub struct TightGraph {
    pub edges: Vec<(usize, usize)>,
    pub out_adj: Vec<Vec<usize>>,
    pub in_adj: Vec<Vec<usize>>,
}

/// Default tightness threshold relative to the largest distance.
pub fn default_eps_tight(space: &FiniteAsymSpace) -> f64 {
    1e-7 * space.max_distance()
}

/// Whether `(i, j)` is a tight pair: `phi(j) - phi(i) = d(i, j)` within
/// `eps_tight`.
fn is_tight(space: &FiniteAsymSpace, phi: &[f64], i: usize, j: usize, eps: f64) -> bool {
    i != j && (phi[j] - phi[i] - space.dist(i, j)).abs() <= eps
}

/// Builds the tight graph of `phi` and reduces it to its transitive
/// skeleton: an edge `(i, j)` is dropped when some `k` gives tight
/// `(i, k)`, `(k, j)` with additive distances, since tight pairs are
/// transitively closed along chains and maximal paths are only
/// well-defined on the minimal edge set.
pub fn tight_graph(space: &FiniteAsymSpace, phi: &[f64], eps_tight: f64) -> TightGraph {
    let n = space.len();
    let mut tight: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if is_tight(space, phi, i, j, eps_tight) {
                tight[i].push(j);
            }
        }
    }
    let mut edges = Vec::new();
    let mut out_adj = vec![Vec::new(); n];
    let mut in_adj = vec![Vec::new(); n];
    for i in 0..n {
        'edge: for &j in &tight[i] {
            for &k in &tight[i] {
                if k != j
                    && is_tight(space, phi, k, j, eps_tight)
                    && (space.dist(i, j) - space.dist(i, k) - space.dist(k, j)).abs() <= eps_tight
                {
                    continue 'edge;
                }
            }
            edges.push((i, j));
            out_adj[i].push(j);
            in_adj[j].push(i);
        }
    }
    TightGraph { edges, out_adj, in_adj }
}

/// All tight pairs (no skeleton reduction); the saturation relation.
pub fn tight_pairs(space: &FiniteAsymSpace, phi: &[f64], eps_tight: f64) -> Vec<(usize, usize)> {
    let n = space.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if is_tight(space, phi, i, j, eps_tight) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// A maximal transport ray: an ordered point chain with its cumulative
/// potential parameters, quotient weight and conditional weights. Branch
/// endpoints stay in the chain but carry zero conditional weight.
#[derive(Clone, Debug, Serialize)]
pub struct Ray {
    pub points: Vec<usize>,
    /// `phi` values along the chain (the ray parametrisation).
    pub params: Vec<f64>,
    /// Quotient weight: total mass of the chain's transport-set points.
    pub v_weight: f64,
    /// Conditional weights, aligned with `points`; zero on branch points.
    pub mu: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RayDecomposition {
    pub rays: Vec<Ray>,
    pub d_set: Vec<usize>,
    pub t_set: Vec<usize>,
    pub b_plus: Vec<usize>,
    pub b_minus: Vec<usize>,
    /// Mass of the branch points, excluded from every conditional measure.
    pub b_mass: f64,
}

/// Extracts maximal chains from the skeleton of `phi` and classifies each
/// point: no incident skeleton edge -> D; on exactly one maximal chain ->
/// T; several chains starting -> B+; several ending -> B-. A point
/// interior to two distinct maximal chains is reported as an error rather
/// than silently resolved.
pub fn decompose(
    space: &FiniteAsymSpace,
    phi: &[f64],
    eps_tight: f64,
) -> Result<RayDecomposition, RayError> {
    let n = space.len();
    let mut graph = tight_graph(space, phi, eps_tight);
    // Additivity tie-handling: a point with one in and one out edge chains
    // additively or the out edge is demoted.
    let mut demoted: Vec<(usize, usize)> = Vec::new();
    for x in 0..n {
        if graph.in_adj[x].len() == 1 && graph.out_adj[x].len() == 1 {
            let w = graph.in_adj[x][0];
            let y = graph.out_adj[x][0];
            let additive =
                (space.dist(w, y) - space.dist(w, x) - space.dist(x, y)).abs() <= 2.0 * eps_tight;
            if !additive {
                demoted.push((x, y));
            }
        }
    }
    for (x, y) in demoted {
        graph.out_adj[x].retain(|&v| v != y);
        graph.in_adj[y].retain(|&v| v != x);
        graph.edges.retain(|&(a, b)| (a, b) != (x, y));
    }

    let in_deg: Vec<usize> = (0..n).map(|v| graph.in_adj[v].len()).collect();
    let out_deg: Vec<usize> = (0..n).map(|v| graph.out_adj[v].len()).collect();
    for v in 0..n {
        // Interior to several chains in either direction: the discrete
        // analogue of interior uniqueness fails.
        if (in_deg[v] >= 2 && out_deg[v] >= 1) || (in_deg[v] >= 1 && out_deg[v] >= 2) {
            return Err(RayError::AmbiguousInterior { point: v });
        }
    }

    let mut d_set = Vec::new();
    let mut b_plus = Vec::new();
    let mut b_minus = Vec::new();
    let mut t_set = Vec::new();
    for v in 0..n {
        match (in_deg[v], out_deg[v]) {
            (0, 0) => d_set.push(v),
            (0, o) if o >= 2 => b_plus.push(v),
            (i, 0) if i >= 2 => b_minus.push(v),
            _ => t_set.push(v),
        }
    }
    let is_branch: Vec<bool> = (0..n)
        .map(|v| (in_deg[v] == 0 && out_deg[v] >= 2) || (out_deg[v] == 0 && in_deg[v] >= 2))
        .collect();

    // Maximal chains start where no unique predecessor continues the walk.
    let mut rays = Vec::new();
    for start in 0..n {
        if out_deg[start] == 0 || (in_deg[start] >= 1 && !is_branch[start]) {
            continue;
        }
        for &first in &graph.out_adj[start] {
            let mut chain = vec![start, first];
            let mut cur = first;
            while out_deg[cur] == 1 && !is_branch[cur] {
                let nxt = graph.out_adj[cur][0];
                chain.push(nxt);
                cur = nxt;
            }
            let params: Vec<f64> = chain.iter().map(|&v| phi[v]).collect();
            let v_weight: f64 = chain
                .iter()
                .filter(|&&v| !is_branch[v])
                .map(|&v| space.weight(v))
                .sum();
            let mu: Vec<f64> = chain
                .iter()
                .map(|&v| if is_branch[v] || v_weight == 0.0 { 0.0 } else { space.weight(v) / v_weight })
                .collect();
            rays.push(Ray { points: chain, params, v_weight, mu });
        }
    }
    let b_mass: f64 = b_plus.iter().chain(&b_minus).map(|&v| space.weight(v)).sum();
    Ok(RayDecomposition { rays, d_set, t_set, b_plus, b_minus, b_mass })
}

impl RayDecomposition {
    /// Verifies the chain structure of every ray against the space:
    /// potential increments match distances edge by edge, chain distances
    /// are additive, and the reconstruction `sum v mu` returns the weight
    /// of every transport-set point.
    pub fn validate(&self, space: &FiniteAsymSpace, phi: &[f64], eps_tight: f64) -> bool {
        for ray in &self.rays {
            let pts = &ray.points;
            for w in pts.windows(2) {
                if (phi[w[1]] - phi[w[0]] - space.dist(w[0], w[1])).abs() > eps_tight {
                    return false;
                }
            }
            for a in 0..pts.len() {
                let mut acc = 0.0;
                for b in a + 1..pts.len() {
                    acc += space.dist(pts[b - 1], pts[b]);
                    if (space.dist(pts[a], pts[b]) - acc).abs() > eps_tight * (b - a) as f64 {
                        return false;
                    }
                }
            }
        }
        let mut reconstructed = vec![0.0f64; space.len()];
        for ray in &self.rays {
            for (v, mu) in ray.points.iter().zip(&ray.mu) {
                reconstructed[*v] += ray.v_weight * mu;
            }
        }
        for &v in &self.t_set {
            if (reconstructed[v] - space.weight(v)).abs() > 1e-12 * space.weight(v).max(1e-12) {
                return false;
            }
        }
        true
    }
}

/// Brute-force cyclical monotonicity: over every subset of the given edges
/// of size at most `max_subset` (capped at 5) and every cyclic order,
/// `sum d(x_i, y_i)^p <= sum d(x_i, y_{i+1})^p + 1e-9`. Subset sizes up to
/// four run as specialised nested loops; size five falls back to a
/// recursive enumeration.
pub fn check_cyclical_monotonicity(
    space: &FiniteAsymSpace,
    edges: &[(usize, usize)],
    power: u32,
    max_subset: usize,
) -> bool {
    assert!(power == 1 || power == 2, "power must be 1 or 2");
    let k_max = max_subset.min(5).min(edges.len());
    let m = edges.len();
    // Flat cross-cost table: cross[i*m + j] = cost(x_i, y_j).
    let cross: Vec<f64> = {
        let mut c = Vec::with_capacity(m * m);
        for &(xi, _) in edges {
            for &(_, yj) in edges {
                let d = space.dist(xi, yj);
                c.push(if power == 1 { d } else { d * d });
            }
        }
        c
    };
    let base: Vec<f64> = (0..m).map(|i| cross[i * m + i]).collect();
    const SLACK: f64 = 1e-9;
    if k_max >= 2 {
        for i in 0..m {
            for j in i + 1..m {
                if cross[i * m + j] + cross[j * m + i] + SLACK < base[i] + base[j] {
                    return false;
                }
            }
        }
    }
    if k_max >= 3 {
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    let b = base[i] + base[j] + base[k];
                    // Two cyclic orders of (i, j, k).
                    let s1 = cross[i * m + j] + cross[j * m + k] + cross[k * m + i];
                    let s2 = cross[i * m + k] + cross[k * m + j] + cross[j * m + i];
                    if s1.min(s2) + SLACK < b {
                        return false;
                    }
                }
            }
        }
    }
    if k_max >= 4 {
        for i in 0..m {
            for j in i + 1..m {
                let cij = cross[i * m + j];
                for k in j + 1..m {
                    let cik = cross[i * m + k];
                    for l in k + 1..m {
                        let b = base[i] + base[j] + base[k] + base[l];
                        let cil = cross[i * m + l];
                        // Six cyclic orders of (i, j, k, l).
                        let s1 = cij + cross[j * m + k] + cross[k * m + l] + cross[l * m + i];
                        let s2 = cij + cross[j * m + l] + cross[l * m + k] + cross[k * m + i];
                        let s3 = cik + cross[k * m + j] + cross[j * m + l] + cross[l * m + i];
                        let s4 = cik + cross[k * m + l] + cross[l * m + j] + cross[j * m + i];
                        let s5 = cil + cross[l * m + j] + cross[j * m + k] + cross[k * m + i];
                        let s6 = cil + cross[l * m + k] + cross[k * m + j] + cross[j * m + i];
                        let min = s1.min(s2).min(s3).min(s4).min(s5).min(s6);
                        if min + SLACK < b {
                            return false;
                        }
                    }
                }
            }
        }
    }
    if k_max >= 5 {
        let mut subset = Vec::with_capacity(5);
        if !visit_subsets(space, edges, power, &mut subset, 0, 5) {
            return false;
        }
    }
    true
}

fn visit_subsets(
    space: &FiniteAsymSpace,
    edges: &[(usize, usize)],
    power: u32,
    subset: &mut Vec<usize>,
    from: usize,
    k_target: usize,
) -> bool {
    if subset.len() == k_target {
        return cycle_ok(space, edges, power, subset);
    }
    for e in from..edges.len() {
        subset.push(e);
        let ok = visit_subsets(space, edges, power, subset, e + 1, k_target);
        subset.pop();
        if !ok {
            return false;
        }
    }
    true
}

fn cycle_ok(
    space: &FiniteAsymSpace,
    edges: &[(usize, usize)],
    power: u32,
    subset: &[usize],
) -> bool {
    let cost = |i: usize, j: usize| {
        let d = space.dist(i, j);
        if power == 1 {
            d
        } else {
            d * d
        }
    };
    let k = subset.len();
    let base: f64 = subset.iter().map(|&e| cost(edges[e].0, edges[e].1)).sum();
    let mut order: Vec<usize> = (1..k).collect();
    // Heap's algorithm over the tail positions; index 0 stays fixed since
    // cyclic orders are rotation classes.
    let mut counters = vec![0usize; k - 1];
    let check = |ord: &[usize]| -> bool {
        let full: Vec<usize> = std::iter::once(0).chain(ord.iter().cloned()).collect();
        let mut shifted = 0.0;
        for i in 0..k {
            let (x, _) = edges[subset[full[i]]];
            let (_, y_next) = edges[subset[full[(i + 1) % k]]];
            shifted += cost(x, y_next);
        }
        shifted + 1e-9 >= base
    };
    if !check(&order) {
        return false;
    }
    let n = order.len();
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(counters[i], i);
            }
            if !check(&order) {
                return false;
            }
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localization::flow::{outward_step, solve_potential};

    fn abs_phi(n: usize) -> Vec<f64> {
        (0..n).map(|i| (-1.0 + 2.0 * i as f64 / (n - 1) as f64).abs()).collect()
    }

    #[test]
    fn skeleton_of_absolute_value_is_two_chains() {
        let n = 201;
        let space = FiniteAsymSpace::line_grid(n);
        let phi = abs_phi(n);
        let g = tight_graph(&space, &phi, default_eps_tight(&space));
        // Two chains leaving the centre: one edge per consecutive pair.
        assert_eq!(g.edges.len(), n - 1);
        let centre = (n - 1) / 2;
        assert_eq!(g.out_adj[centre].len(), 2);
        assert_eq!(g.in_adj[centre].len(), 0);
    }

    #[test]
    fn constant_phi_has_empty_graph() {
        let space = FiniteAsymSpace::line_grid(21);
        let g = tight_graph(&space, &[0.0; 21], default_eps_tight(&space));
        assert!(g.edges.is_empty());
        let dec = decompose(&space, &[0.0; 21], default_eps_tight(&space)).unwrap();
        assert_eq!(dec.d_set.len(), 21);
        assert!(dec.rays.is_empty());
    }

    #[test]
    fn distance_potential_reaches_everything() {
        // phi = d(x0, .) is 1-Lipschitz and every point is tight-reachable
        // from x0.
        let space = FiniteAsymSpace::circle_grid(40, 0.025, 0.0125);
        let n = space.len();
        let phi: Vec<f64> = (0..n).map(|j| space.dist(7, j)).collect();
        assert!(space.is_one_lipschitz(&phi, 1e-12));
        let pairs = tight_pairs(&space, &phi, default_eps_tight(&space));
        let mut reach = vec![false; n];
        reach[7] = true;
        // BFS oracle through tight pairs.
        let mut frontier = vec![7usize];
        while let Some(u) = frontier.pop() {
            for &(a, b) in &pairs {
                if a == u && !reach[b] {
                    reach[b] = true;
                    frontier.push(b);
                }
            }
        }
        assert!(reach.iter().all(|&r| r));
    }

    #[test]
    fn absolute_value_decomposition_structure() {
        let n = 201;
        let space = FiniteAsymSpace::line_grid(n);
        let phi = abs_phi(n);
        let eps = default_eps_tight(&space);
        let dec = decompose(&space, &phi, eps).unwrap();
        let centre = (n - 1) / 2;
        assert_eq!(dec.rays.len(), 2);
        assert!(dec.d_set.is_empty());
        assert_eq!(dec.b_plus, vec![centre]);
        assert!(dec.b_minus.is_empty());
        assert!(dec.validate(&space, &phi, eps));
        // Each ray carries half the mass minus the branch point.
        for ray in &dec.rays {
            assert!((ray.v_weight - 100.0 / 201.0).abs() < 1e-12);
            assert_eq!(ray.points.len(), 101);
            assert_eq!(ray.points[0], centre);
            assert_eq!(ray.mu[0], 0.0);
        }
    }

    #[test]
    fn solved_circle_two_step_reconstructs_mass() {
        // Circle with asymmetric step costs and a two-plateau mean-zero f.
        let n = 200;
        let lambda = 2.0;
        let d_len = 1.0;
        let space = FiniteAsymSpace::circle_grid(n, d_len / n as f64, lambda * d_len / n as f64);
        let mut f = vec![0.0; n];
        for (i, v) in f.iter_mut().enumerate() {
            *v = if i < n / 2 { 1.0 } else { -1.0 };
        }
        let sol = solve_potential(&space, &f).unwrap();
        let eps = default_eps_tight(&space);
        let dec = decompose(&space, &sol.phi, eps).unwrap();
        assert!(dec.validate(&space, &sol.phi, eps));
        assert!(!dec.rays.is_empty());
        // Reconstruction: sum of v mu equals m on the transport set.
        let t_mass: f64 = dec.t_set.iter().map(|&v| space.weight(v)).sum();
        let ray_mass: f64 = dec.rays.iter().map(|r| r.v_weight).sum();
        assert!((t_mass - ray_mass).abs() <= 1e-12);
    }

    #[test]
    fn cyclical_monotonicity_of_tight_edges() {
        let n = 101;
        let space = FiniteAsymSpace::line_grid(n);
        let f = outward_step(n);
        let sol = solve_potential(&space, &f).unwrap();
        let g = tight_graph(&space, &sol.phi, default_eps_tight(&space));
        assert!(check_cyclical_monotonicity(&space, &g.edges, 1, 3));
    }

    #[test]
    fn crossed_pair_fails_squared_monotonicity() {
        // Points 0, 0.5, 1, 2 on the line; the pairing (0 -> 2), (1 -> 0.5)
        // is not d^2-cyclically monotone.
        let xs = [0.0f64, 0.5, 1.0, 2.0];
        let d: Vec<Vec<f64>> = xs
            .iter()
            .map(|&a| xs.iter().map(|&b| (a - b).abs()).collect())
            .collect();
        let space = FiniteAsymSpace::from_matrix(d, vec![1.0; 4]).unwrap();
        let edges = vec![(0usize, 3usize), (2usize, 1usize)];
        assert!(!check_cyclical_monotonicity(&space, &edges, 2, 2));
        // A co-moving pairing passes both powers.
        let comoving = vec![(0usize, 2usize), (1usize, 3usize)];
        assert!(check_cyclical_monotonicity(&space, &comoving, 1, 2));
        assert!(check_cyclical_monotonicity(&space, &comoving, 2, 2));
    }

    #[test]
    fn branch_mass_vanishes_under_refinement() {
        // The branch set of the |x| potential is the single centre point;
        // its relative mass decays linearly in the grid spacing.
        let mut masses = Vec::new();
        for &n in &[51usize, 101, 201] {
            let space = FiniteAsymSpace::line_grid(n);
            let phi = abs_phi(n);
            let dec = decompose(&space, &phi, default_eps_tight(&space)).unwrap();
            masses.push(dec.b_mass / space.total_mass());
        }
        assert!(masses[0] / masses[1] > 1.8 && masses[0] / masses[1] < 2.2);
        assert!(masses[1] / masses[2] > 1.8 && masses[1] / masses[2] < 2.2);
    }

    #[test]
    fn branch_construction_passes_squared_monotonicity() {
        // A set built like the branching lemma: sup phi(x) <= inf phi(y)
        // and monotone phi alignment implies d^2-cyclical monotonicity.
        let n = 41;
        let space = FiniteAsymSpace::line_grid(n);
        let phi = abs_phi(n);
        let eps = default_eps_tight(&space);
        let dec = decompose(&space, &phi, eps).unwrap();
        let mut edges = Vec::new();
        for ray in &dec.rays {
            let lo = ray.points[0];
            for &hi in &ray.points[ray.points.len() - 3..] {
                if phi[hi] >= 0.8 {
                    edges.push((lo, hi));
                }
            }
        }
        assert!(check_cyclical_monotonicity(&space, &edges, 2, 4));
    }
}
