//! Transshipment solver: successive shortest paths with node potentials on
//! the complete digraph of a finite asymmetric space. The dual potentials
//! are the 1-Lipschitz maximisers of the mean-zero problem, and
//! complementary slackness ties positive flow arcs to tight potential
//! differences, which the ray extraction relies on.

use super::space::FiniteAsymSpace;
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("supplies are not mean-zero: |sum f m| = {imbalance} > {tol}")]
    NotMeanZero { imbalance: f64, tol: f64 },
    #[error("duality gap {gap} exceeds 1e-7 of the objective {objective}")]
    NumericalDualityGap { gap: f64, objective: f64 },
    #[error("solver exceeded its iteration budget")]
    IterationBudget,
}

/// Optimal dual potentials with the supporting flow.
#[derive(Clone, Debug)]
pub struct PotentialSolution {
    /// 1-Lipschitz potential, normalised so the first point carries zero.
    pub phi: Vec<f64>,
    /// Sparse non-negative arc flows `(from, to, amount)`.
    pub flow: Vec<(usize, usize, f64)>,
    /// Minimum transport cost, equal to `sum f m phi` at optimality.
    pub objective: f64,
}

/// Solves the mean-zero maximisation for `f` on the space: finds the
/// minimum-cost flow with node demands `f_i m_i` and returns its dual
/// potentials. Positive flow on `(i, j)` implies
/// `phi(j) - phi(i) = d(i, j)` up to roundoff.
pub fn solve_potential(space: &FiniteAsymSpace, f: &[f64]) -> Result<PotentialSolution, FlowError> {
    let n = space.len();
    assert_eq!(f.len(), n, "f must assign a value to every point");
    let demand: Vec<f64> = (0..n).map(|i| f[i] * space.weight(i)).collect();
    let scale: f64 = demand.iter().map(|b| b.abs()).sum();
    let imbalance: f64 = demand.iter().sum();
    let balance_tol = 1e-12 * scale;
    if imbalance.abs() > balance_tol && scale > 0.0 {
        return Err(FlowError::NotMeanZero { imbalance: imbalance.abs(), tol: balance_tol });
    }
    if scale == 0.0 {
        return Ok(PotentialSolution { phi: vec![0.0; n], flow: vec![], objective: 0.0 });
    }

    // excess > 0: the node must ship mass out (a supply).
    let mut excess: Vec<f64> = demand.iter().map(|b| -b).collect();
    let mut potential = vec![0.0f64; n];
    let mut flow: HashMap<(usize, usize), f64> = HashMap::new();
    // incoming_with_flow[u]: sources v with flow(v, u) > 0, i.e. residual
    // reverse arcs u -> v.
    let mut incoming: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let done_tol = 1e-13 * scale;
    let mut first_tree = true;
    let budget = 50 * n + 1000;

    for _iter in 0..budget {
        let Some(source) = excess
            .iter()
            .position(|&e| e > done_tol)
        else {
            break;
        };
        // Shortest-path tree in the residual network under reduced costs:
        // Bellman–Ford for the bootstrap tree, Dijkstra with nonnegative
        // reduced costs thereafter.
        let (dist, parent) = if first_tree {
            bellman_ford(space, &potential, &flow, &incoming, source)
        } else {
            dijkstra(space, &potential, &flow, &incoming, source)
        };
        first_tree = false;
        // Nearest reachable deficit node.
        let mut target: Option<usize> = None;
        for v in 0..n {
            if excess[v] < -done_tol && dist[v].is_finite()
                && target.is_none_or(|t| dist[v] < dist[t]) {
                    target = Some(v);
                }
        }
        let Some(target) = target else {
            return Err(FlowError::IterationBudget);
        };
        // Residual capacity along the path (reverse arcs are capped by the
        // flow they undo).
        let mut push = excess[source].min(-excess[target]);
        let mut v = target;
        while v != source {
            let (u, reverse) = parent[v];
            if reverse {
                push = push.min(*flow.get(&(v, u)).unwrap_or(&0.0));
            }
            v = u;
        }
        let mut v = target;
        while v != source {
            let (u, reverse) = parent[v];
            if reverse {
                let e = flow.get_mut(&(v, u)).expect("reverse arc without flow");
                *e -= push;
                if *e <= 1e-15 * scale {
                    flow.remove(&(v, u));
                    incoming[u].remove(&v);
                }
            } else {
                *flow.entry((u, v)).or_insert(0.0) += push;
                incoming[v].insert(u);
            }
            v = u;
        }
        excess[source] -= push;
        excess[target] += push;
        let dist_t = dist[target];
        for v in 0..n {
            potential[v] += dist[v].min(dist_t);
        }
    }
    if excess.iter().any(|&e| e.abs() > 10.0 * done_tol.max(1e-300)) {
        return Err(FlowError::IterationBudget);
    }

    // Centre the dual inside its optimal face. The face is the solution
    // set of a difference-constraint system (every arc an inequality, flow
    // arcs forced to equality), which is a lattice: the pointwise-max and
    // pointwise-min optimal potentials exist and are shortest-path
    // distances in the constraint graph, computable by Dijkstra under the
    // solved reduced costs. Their midpoint is tight only on arcs the whole
    // face keeps tight, so spurious zero-flow tightness from the last
    // shortest-path tree is removed.
    let phi = interior_potential(space, &potential, &flow);
    let objective: f64 = flow.iter().map(|(&(i, j), &x)| x * space.dist(i, j)).sum();
    let dual_value: f64 = (0..n).map(|i| demand[i] * phi[i]).sum();
    let gap = (objective - dual_value).abs();
    if gap > 1e-7 * objective.max(1e-30) && gap > 1e-12 * scale {
        return Err(FlowError::NumericalDualityGap { gap, objective });
    }
    let mut flow_list: Vec<(usize, usize, f64)> =
        flow.into_iter().map(|((i, j), x)| (i, j, x)).collect();
    flow_list.sort_by_key(|a| (a.0, a.1));
    Ok(PotentialSolution { phi, flow: flow_list, objective })
}

/// Midpoint of the pointwise-extreme optimal duals, normalised to vanish
/// at the first node. `phi_max(x)` is the constraint-graph distance
/// `0 -> x` and `phi_min(x)` is minus the distance `x -> 0`, where the
/// constraint graph carries every arc `(u, v)` at cost `d(u, v)` plus a
/// reverse arc at cost `-d(u, v)` for each flow arc.
fn interior_potential(
    space: &FiniteAsymSpace,
    potential: &[f64],
    flow: &HashMap<(usize, usize), f64>,
) -> Vec<f64> {
    let n = space.len();
    // Reverse constraint arcs by endpoint, both orientations.
    let mut forced_from: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut forced_into: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in flow.keys() {
        // Equality arc j -> i at cost -d(i, j).
        forced_from[j].push(i);
        forced_into[i].push(j);
    }
    // Reduced costs under the solved potential are nonnegative on every
    // constraint arc (zero on forced ones), so plain Dijkstra applies.
    let dist_from_root = |reversed: bool| -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; n];
        let mut settled = vec![false; n];
        dist[0] = 0.0;
        for _ in 0..n {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..n {
                if !settled[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            settled[u] = true;
            let relax = |dist: &mut Vec<f64>, v: usize, w: f64| {
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                }
            };
            for v in 0..n {
                if v == u {
                    continue;
                }
                // Ordinary arc u -> v (or v -> u when walking reversed).
                let c = if reversed {
                    space.dist(v, u) + potential[v] - potential[u]
                } else {
                    space.dist(u, v) + potential[u] - potential[v]
                };
                relax(&mut dist, v, c.max(0.0));
            }
            let forced = if reversed { &forced_into[u] } else { &forced_from[u] };
            for &v in forced {
                relax(&mut dist, v, 0.0);
            }
        }
        dist
    };
    let fwd = dist_from_root(false);
    let bwd = dist_from_root(true);
    (0..n)
        .map(|x| {
            let hi = fwd[x] + potential[x] - potential[0];
            let lo = -(bwd[x] + potential[0] - potential[x]);
            0.5 * (hi + lo)
        })
        .collect()
}

fn residual_arcs<'a>(
    space: &'a FiniteAsymSpace,
    potential: &'a [f64],
    flow: &'a HashMap<(usize, usize), f64>,
    incoming: &'a [BTreeSet<usize>],
    u: usize,
) -> impl Iterator<Item = (usize, f64, bool)> + 'a {
    let n = space.len();
    let forward = (0..n).filter(move |&v| v != u).map(move |v| {
        let c = space.dist(u, v) + potential[u] - potential[v];
        (v, c.max(0.0), false)
    });
    let reverse = incoming[u].iter().map(move |&v| {
        debug_assert!(flow.contains_key(&(v, u)));
        let c = -space.dist(v, u) + potential[u] - potential[v];
        (v, c.max(0.0), true)
    });
    forward.chain(reverse)
}

type Tree = (Vec<f64>, Vec<(usize, bool)>);

fn dijkstra(
    space: &FiniteAsymSpace,
    potential: &[f64],
    flow: &HashMap<(usize, usize), f64>,
    incoming: &[BTreeSet<usize>],
    source: usize,
) -> Tree {
    let n = space.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![(usize::MAX, false); n];
    let mut settled = vec![false; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for v in 0..n {
            if !settled[v] && dist[v] < best {
                best = dist[v];
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        settled[u] = true;
        for (v, c, reverse) in residual_arcs(space, potential, flow, incoming, u) {
            if !settled[v] && dist[u] + c < dist[v] {
                dist[v] = dist[u] + c;
                parent[v] = (u, reverse);
            }
        }
    }
    (dist, parent)
}

fn bellman_ford(
    space: &FiniteAsymSpace,
    potential: &[f64],
    flow: &HashMap<(usize, usize), f64>,
    incoming: &[BTreeSet<usize>],
    source: usize,
) -> Tree {
    let n = space.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![(usize::MAX, false); n];
    dist[source] = 0.0;
    for _round in 0..n {
        let mut changed = false;
        for u in 0..n {
            if !dist[u].is_finite() {
                continue;
            }
            for (v, c, reverse) in residual_arcs(space, potential, flow, incoming, u) {
                if dist[u] + c < dist[v] - 1e-18 {
                    dist[v] = dist[u] + c;
                    parent[v] = (u, reverse);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (dist, parent)
}

/// Balanced step driving mass outward from the centre of the line grid;
/// the known optimal potential is `|x|` up to an additive constant.
#[cfg(test)]
pub(crate) fn outward_step(points: usize) -> Vec<f64> {
    let mut f = vec![0.0; points];
    let mut pos = 0usize;
    let mut neg = 0usize;
    for (i, v) in f.iter_mut().enumerate() {
        let x = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
        if x.abs() > 0.5 {
            *v = 1.0;
            pos += 1;
        } else if x.abs() < 0.5 {
            *v = -1.0;
            neg += 1;
        }
    }
    let ratio = pos as f64 / neg as f64;
    for v in f.iter_mut() {
        if *v < 0.0 {
            *v *= ratio;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_single_arc() {
        let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let space = FiniteAsymSpace::from_matrix(d, vec![1.0, 1.0]).unwrap();
        let sol = solve_potential(&space, &[-1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.phi[1] - sol.phi[0], 1.0, epsilon = 1e-12);
        assert_eq!(sol.flow.len(), 1);
        assert_eq!((sol.flow[0].0, sol.flow[0].1), (0, 1));
    }

    #[test]
    fn zero_function_is_trivial() {
        let space = FiniteAsymSpace::line_grid(11);
        let sol = solve_potential(&space, &[0.0; 11]).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.phi.iter().all(|&p| p == 0.0));
        assert!(sol.flow.is_empty());
    }

    #[test]
    fn mean_zero_precondition_enforced() {
        let space = FiniteAsymSpace::line_grid(5);
        assert!(matches!(
            solve_potential(&space, &[1.0, 1.0, 1.0, 1.0, 1.0]),
            Err(FlowError::NotMeanZero { .. })
        ));
    }

    #[test]
    fn line_grid_recovers_absolute_value_potential() {
        let n = 201;
        let space = FiniteAsymSpace::line_grid(n);
        let f = outward_step(n);
        let sol = solve_potential(&space, &f).unwrap();
        // Compare against |x| modulo an additive constant.
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let shift = xs[0].abs() - sol.phi[0];
        for i in 0..n {
            assert_abs_diff_eq!(sol.phi[i] + shift, xs[i].abs(), epsilon = 1e-9);
        }
        // Duality-gap oracle: the value of |x| as a dual solution matches
        // the flow objective.
        let dual_direct: f64 = (0..n).map(|i| f[i] * space.weight(i) * xs[i].abs()).sum();
        assert_abs_diff_eq!(dual_direct, sol.objective, epsilon = 1e-10);
    }

    #[test]
    fn potentials_are_lipschitz_and_slack_complementary() {
        let n = 60;
        let space = FiniteAsymSpace::line_grid(n);
        let f = outward_step(n);
        let sol = solve_potential(&space, &f).unwrap();
        assert!(space.is_one_lipschitz(&sol.phi, 1e-9));
        for &(i, j, x) in &sol.flow {
            assert!(x > 0.0);
            assert_abs_diff_eq!(sol.phi[j] - sol.phi[i], space.dist(i, j), epsilon = 1e-9);
        }
    }
}
