//! Polyhedra `{x : <a_i, x> <= b_i}` intersected with the window box
//! `|x_j| <= box_r`, and the LP / ray-casting machinery built on them.

use rand::Rng;

use super::CellError;
use crate::lp::{self, LinearProgram, LpOutcome, SimplexOptions};
use crate::processes::{dot, norm, uniform_direction};

/// Tie tolerance for side-of-plane tests; points within it count as the origin side.
pub const TIE_TOL: f64 = 1e-12;
const DEGENERATE_CHORD: f64 = 1e-12;
const CHORD_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceSystem {
    pub dim: usize,
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub box_r: f64,
}

/// Where a ray leaves the polyhedron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayExit {
    /// Distance to the first constraint crossed.
    Finite(f64),
    /// No constraint (box excluded) lies ahead.
    Unbounded,
}

impl HalfspaceSystem {
    pub fn new(dim: usize, box_r: f64) -> Self {
        HalfspaceSystem { dim, normals: Vec::new(), offsets: Vec::new(), box_r }
    }

    pub fn push(&mut self, normal: Vec<f64>, offset: f64) {
        debug_assert_eq!(normal.len(), self.dim);
        self.normals.push(normal);
        self.offsets.push(offset);
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Largest violation `max_i (<a_i,x> - b_i)` including the box rows.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let planes = self
            .normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| dot(a, x) - b)
            .fold(f64::NEG_INFINITY, f64::max);
        let boxed = x.iter().map(|v| v.abs() - self.box_r).fold(f64::NEG_INFINITY, f64::max);
        planes.max(boxed)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Distance along `dir` from `from` to the first plane ahead, ignoring the box.
    pub fn ray_exit(&self, from: &[f64], dir: &[f64]) -> RayExit {
        let mut best = f64::INFINITY;
        for (a, b) in self.normals.iter().zip(&self.offsets) {
            let s = dot(a, dir);
            if s > 0.0 {
                let slack = (b - dot(a, from)).max(0.0);
                best = best.min(slack / s);
            }
        }
        if best.is_finite() { RayExit::Finite(best) } else { RayExit::Unbounded }
    }

    /// Chord `(t_lo, t_hi)` of the line `from + t·dir` inside the polyhedron and box.
    pub fn chord(&self, from: &[f64], dir: &[f64]) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut clip = |s: f64, slack: f64| {
            let slack = slack.max(0.0);
            if s > 0.0 {
                hi = hi.min(slack / s);
            } else if s < 0.0 {
                lo = lo.max(slack / s);
            }
        };
        for (a, b) in self.normals.iter().zip(&self.offsets) {
            clip(dot(a, dir), b - dot(a, from));
        }
        for (j, &d) in dir.iter().enumerate() {
            clip(d, self.box_r - from[j]);
            clip(-d, self.box_r + from[j]);
        }
        (lo, hi)
    }

    /// LP over `x = p - q` with the polyhedron rows and the box; an optional
    /// extra column `r >= 0` is added with per-row coefficients.
    fn build_lp(&self, objective_x: &[f64], radius_column: bool) -> LinearProgram {
        let n = self.dim;
        let extra = usize::from(radius_column);
        let width = 2 * n + extra;
        let mut rows = Vec::with_capacity(self.len() + 2 * n);
        let mut rhs = Vec::with_capacity(self.len() + 2 * n);
        for (a, b) in self.normals.iter().zip(&self.offsets) {
            let mut row = vec![0.0; width];
            for j in 0..n {
                row[j] = a[j];
                row[n + j] = -a[j];
            }
            if radius_column {
                row[2 * n] = norm(a);
            }
            rows.push(row);
            rhs.push(*b);
        }
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0; width];
                row[j] = sign;
                row[n + j] = -sign;
                if radius_column {
                    row[2 * n] = 1.0;
                }
                rows.push(row);
                rhs.push(self.box_r);
            }
        }
        let mut objective = vec![0.0; width];
        for j in 0..n {
            objective[j] = objective_x[j];
            objective[n + j] = -objective_x[j];
        }
        if radius_column {
            objective[2 * n] = 1.0;
        }
        LinearProgram { objective, rows, rhs }
    }

    fn unsplit(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|j| x[j] - x[self.dim + j]).collect()
    }

    /// Maximizer of `<direction, x>` over the polyhedron and box. Fails with
    /// `Truncated` when the optimum sits on the box.
    pub fn support_point(&self, direction: &[f64]) -> Result<Vec<f64>, CellError> {
        let lp = self.build_lp(direction, false);
        match lp::solve(&lp, &SimplexOptions::default())? {
            LpOutcome::Optimal { x, .. } => {
                let v = self.unsplit(&x);
                let edge = self.box_r * (1.0 - 1e-9);
                if v.iter().any(|c| c.abs() >= edge) {
                    return Err(CellError::Truncated("support point on the window box".into()));
                }
                Ok(v)
            }
            LpOutcome::Infeasible => Err(CellError::Empty),
            LpOutcome::Unbounded => Err(CellError::Truncated("unbounded support LP".into())),
        }
    }

    /// Center and radius of the largest ball inside the polyhedron and box.
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64), CellError> {
        let zeros = vec![0.0; self.dim];
        let lp = self.build_lp(&zeros, true);
        match lp::solve(&lp, &SimplexOptions::default())? {
            LpOutcome::Optimal { x, value } => Ok((self.unsplit(&x), value.max(0.0))),
            LpOutcome::Infeasible => Err(CellError::Empty),
            LpOutcome::Unbounded => Err(CellError::Truncated("unbounded Chebyshev LP".into())),
        }
    }

    /// Hit-and-run walk of `steps` moves from `start`.
    pub fn hit_and_run<R: Rng + ?Sized>(&self, start: &[f64], steps: usize, rng: &mut R) -> Result<Vec<f64>, CellError> {
        let mut x = start.to_vec();
        for _ in 0..steps {
            let mut moved = false;
            for _ in 0..CHORD_RETRIES {
                let dir = uniform_direction(self.dim, rng);
                let (lo, hi) = self.chord(&x, &dir);
                if hi - lo < DEGENERATE_CHORD {
                    continue;
                }
                let t = lo + (hi - lo) * rng.random::<f64>();
                for (xi, di) in x.iter_mut().zip(&dir) {
                    *xi += t * di;
                }
                moved = true;
                break;
            }
            if !moved {
                return Err(CellError::DegenerateChord);
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(tau: f64, box_r: f64) -> HalfspaceSystem {
        let mut s = HalfspaceSystem::new(2, box_r);
        s.push(vec![1.0, 0.0], tau);
        s.push(vec![-1.0, 0.0], tau);
        s.push(vec![0.0, 1.0], tau);
        s.push(vec![0.0, -1.0], tau);
        s
    }

    #[test]
    fn support_and_center_of_square() {
        let s = square(1.5, 10.0);
        let v = s.support_point(&[1.0, 0.0]).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-12);
        let (c, r) = s.chebyshev_center().unwrap();
        assert!(c.iter().all(|x| x.abs() < 1e-12));
        assert!((r - 1.5).abs() < 1e-12);
    }

    #[test]
    fn truncated_support_detected() {
        let mut s = HalfspaceSystem::new(2, 5.0);
        s.push(vec![1.0, 0.0], 1.0);
        assert!(matches!(s.support_point(&[-1.0, 0.0]), Err(CellError::Truncated(_))));
    }

    #[test]
    fn empty_system_reported() {
        let mut s = HalfspaceSystem::new(1, 5.0);
        s.push(vec![1.0], 1.0);
        s.push(vec![-1.0], -2.0); // x >= 2
        assert_eq!(s.chebyshev_center(), Err(CellError::Empty));
    }

    #[test]
    fn chord_inside_square() {
        let s = square(1.0, 10.0);
        let (lo, hi) = s.chord(&[0.0, 0.0], &[1.0, 0.0]);
        assert!((lo + 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        assert_eq!(s.ray_exit(&[0.0, 0.0], &[0.0, 1.0]), RayExit::Finite(1.0));
    }
}
