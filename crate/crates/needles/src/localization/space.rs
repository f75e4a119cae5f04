//! Finite asymmetric metric-measure spaces: dense distance matrix plus
//! positive point weights. The discrete stand-in for a measured space with
//! an asymmetric distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("distance matrix must be square and match the weight vector")]
    ShapeMismatch,
    #[error("d({i},{i}) must be zero")]
    NonzeroDiagonal { i: usize },
    #[error("d({i},{j}) must be positive for i != j")]
    NonPositiveOffDiagonal { i: usize, j: usize },
    #[error("weights must be positive and finite")]
    BadWeight,
    #[error("ordered triangle inequality fails: d({i},{j}) > d({i},{k}) + d({k},{j})")]
    TriangleViolation { i: usize, j: usize, k: usize },
}

/// Finite point set with an asymmetric distance matrix and positive
/// weights. Symmetry of `d` is not required; the ordered triangle
/// inequality is validated at construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteAsymSpace {
    labels: Vec<String>,
    d: Vec<Vec<f64>>,
    m: Vec<f64>,
}

impl FiniteAsymSpace {
    pub fn new(labels: Vec<String>, d: Vec<Vec<f64>>, m: Vec<f64>) -> Result<Self, SpaceError> {
        let n = d.len();
        if n == 0 || m.len() != n || d.iter().any(|row| row.len() != n) || labels.len() != n {
            return Err(SpaceError::ShapeMismatch);
        }
        if m.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(SpaceError::BadWeight);
        }
        for i in 0..n {
            if d[i][i] != 0.0 {
                return Err(SpaceError::NonzeroDiagonal { i });
            }
            for j in 0..n {
                if i != j && (!(d[i][j] > 0.0) || !d[i][j].is_finite()) {
                    return Err(SpaceError::NonPositiveOffDiagonal { i, j });
                }
            }
        }
        let space = FiniteAsymSpace { labels, d, m };
        space.validate_triangle()?;
        Ok(space)
    }

    /// Construction without labels: points are named by index.
    pub fn from_matrix(d: Vec<Vec<f64>>, m: Vec<f64>) -> Result<Self, SpaceError> {
        let labels = (0..d.len()).map(|i| i.to_string()).collect();
        Self::new(labels, d, m)
    }

    /// Repairs a matrix failing the triangle inequality by shortest-path
    /// closure (Floyd–Warshall), then validates. Opt-in: silent repair
    /// changes the instance.
    pub fn with_metric_repair(
        labels: Vec<String>,
        mut d: Vec<Vec<f64>>,
        m: Vec<f64>,
    ) -> Result<Self, SpaceError> {
        let n = d.len();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        Self::new(labels, d, m)
    }

    fn validate_triangle(&self) -> Result<(), SpaceError> {
        let n = self.len();
        let scale = self.max_distance();
        let tol = 1e-12 * scale.max(1.0);
        for i in 0..n {
            for k in 0..n {
                let dik = self.d[i][k];
                for j in 0..n {
                    if self.d[i][j] > dik + self.d[k][j] + tol {
                        return Err(SpaceError::TriangleViolation { i, j, k });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.m[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.m
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn total_mass(&self) -> f64 {
        self.m.iter().sum()
    }

    pub fn max_distance(&self) -> f64 {
        self.d
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(0.0f64, f64::max)
    }

    /// Largest observed asymmetry ratio `d(i,j)/d(j,i)`, a lower bound for
    /// the reversibility constant of the instance.
    pub fn asymmetry_ratio(&self) -> f64 {
        let n = self.len();
        let mut best = 1.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    best = best.max(self.d[i][j] / self.d[j][i]);
                }
            }
        }
        best
    }

    /// Checks that `phi` is 1-Lipschitz: `phi(j) - phi(i) <= d(i,j) + slack`
    /// for every ordered pair.
    pub fn is_one_lipschitz(&self, phi: &[f64], slack: f64) -> bool {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                if phi[j] - phi[i] > self.d[i][j] + slack {
                    return false;
                }
            }
        }
        true
    }

    /// Uniform grid on `[-1, 1]` with the standard symmetric distance and
    /// uniform weights; the reference instance for ray-decomposition tests.
    pub fn line_grid(points: usize) -> Self {
        assert!(points >= 2);
        let xs: Vec<f64> = (0..points)
            .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
            .collect();
        let d = xs
            .iter()
            .map(|&a| xs.iter().map(|&b| (a - b).abs()).collect())
            .collect();
        let m = vec![1.0 / points as f64; points];
        let labels = xs.iter().map(|x| format!("{x:.6}")).collect();
        FiniteAsymSpace { labels, d, m }
    }

    /// Discrete circle with `points` sites, forward step cost `fwd` and
    /// backward step cost `bwd` per site; distances are shortest-path over
    /// the ring and weights are uniform with total mass one.
    pub fn circle_grid(points: usize, fwd: f64, bwd: f64) -> Self {
        assert!(points >= 3 && fwd > 0.0 && bwd > 0.0);
        let n = points;
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let steps_fwd = (j + n - i) % n;
                let steps_bwd = (i + n - j) % n;
                d[i][j] = (steps_fwd as f64 * fwd).min(steps_bwd as f64 * bwd);
            }
        }
        let m = vec![1.0 / n as f64; n];
        let labels = (0..n).map(|i| i.to_string()).collect();
        FiniteAsymSpace { labels, d, m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_violation_detected() {
        let d = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let err = FiniteAsymSpace::from_matrix(d, vec![1.0; 3]);
        assert!(matches!(err, Err(SpaceError::TriangleViolation { .. })));
    }

    #[test]
    fn metric_repair_closes_shortcuts() {
        let d = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let labels = (0..3).map(|i| i.to_string()).collect();
        let s = FiniteAsymSpace::with_metric_repair(labels, d, vec![1.0; 3]).unwrap();
        assert_eq!(s.dist(0, 2), 2.0);
    }

    #[test]
    fn asymmetric_matrix_is_accepted() {
        let d = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        let s = FiniteAsymSpace::from_matrix(d, vec![0.5, 0.5]).unwrap();
        assert_eq!(s.asymmetry_ratio(), 2.0);
    }

    #[test]
    fn line_grid_shape() {
        let g = FiniteAsymSpace::line_grid(201);
        assert_eq!(g.len(), 201);
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        assert!((g.dist(0, 200) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn circle_grid_wraps() {
        let c = FiniteAsymSpace::circle_grid(8, 1.0, 2.0);
        // One forward step vs seven backward steps.
        assert_eq!(c.dist(0, 1), 1.0);
        // Backward one step costs 2, forward seven steps costs 7.
        assert_eq!(c.dist(1, 0), 2.0);
        assert!((c.total_mass() - 1.0).abs() < 1e-12);
    }
}
