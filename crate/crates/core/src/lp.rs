//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Problems are small (a few hundred constraints at most), so a full tableau
//! is used. Solves `maximize c·x  s.t.  A x <= b, x >= 0` with `b` of any sign.

use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_PIVOT_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("simplex exceeded the pivot cap of {0}")]
    PivotCap(usize),
    #[error("malformed linear program: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub tol: f64,
    pub pivot_cap: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { tol: DEFAULT_TOL, pivot_cap: DEFAULT_PIVOT_CAP }
    }
}

struct Tableau {
    /// m constraint rows followed by one objective row; last column is the rhs.
    cells: Vec<f64>,
    width: usize,
    m: usize,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.cells[r * self.width + self.width - 1]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for c in 0..w {
            self.cells[pr * w + c] *= inv;
        }
        let pivot_row: Vec<f64> = self.cells[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.m {
            if r == pr {
                continue;
            }
            let factor = self.cells[r * w + pc];
            if factor != 0.0 {
                let row = &mut self.cells[r * w..(r + 1) * w];
                for (cell, p) in row.iter_mut().zip(&pivot_row) {
                    *cell -= factor * p;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs Bland's rule on the objective row (reduced costs; negative entries
    /// improve). Only columns `< allowed` may enter.
    fn optimize(&mut self, allowed: usize, opts: &SimplexOptions) -> Result<bool, LpError> {
        let obj = self.m;
        loop {
            if self.pivots >= opts.pivot_cap {
                return Err(LpError::PivotCap(opts.pivot_cap));
            }
            let entering = (0..allowed).find(|&c| self.at(obj, c) < -opts.tol);
            let Some(pc) = entering else { return Ok(true) };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, pc);
                if a > opts.tol {
                    let ratio = self.rhs(r) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - opts.tol
                                || ((ratio - bratio).abs() <= opts.tol && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Ok(false),
                Some((pr, _)) => self.pivot(pr, pc),
            }
        }
    }
}

/// Solve `maximize objective·x  s.t.  rows·x <= rhs, x >= 0`.
pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpOutcome, LpError> {
    let nv = lp.objective.len();
    let m = lp.rows.len();
    if lp.rhs.len() != m {
        return Err(LpError::Malformed("rows and rhs lengths differ"));
    }
    if lp.rows.iter().any(|r| r.len() != nv) {
        return Err(LpError::Malformed("row length differs from objective length"));
    }
    let negative: Vec<usize> = (0..m).filter(|&i| lp.rhs[i] < 0.0).collect();
    let n_art = negative.len();
    // columns: x (nv) | slack (m) | artificial (n_art) | rhs
    let width = nv + m + n_art + 1;
    let mut t = Tableau {
        cells: vec![0.0; (m + 1) * width],
        width,
        m,
        basis: vec![0; m],
        pivots: 0,
    };
    let mut art_col = nv + m;
    for i in 0..m {
        let flip = lp.rhs[i] < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        let row = &mut t.cells[i * width..(i + 1) * width];
        for (j, a) in lp.rows[i].iter().enumerate() {
            row[j] = sign * a;
        }
        row[nv + i] = sign;
        row[width - 1] = sign * lp.rhs[i];
        if flip {
            row[art_col] = 1.0;
            t.basis[i] = art_col;
            art_col += 1;
        } else {
            t.basis[i] = nv + i;
        }
    }

    if n_art > 0 {
        // phase 1: maximize -Σ artificials; reduced costs = -Σ of artificial rows
        let obj = m;
        for &i in &negative {
            for c in 0..width {
                let v = t.cells[i * width + c];
                t.cells[obj * width + c] -= v;
            }
        }
        for c in nv + m..nv + m + n_art {
            t.cells[obj * width + c] = 0.0;
        }
        t.optimize(nv + m + n_art, opts)?;
        // objective rhs holds -Σ artificials
        if t.rhs(obj) < -opts.tol * scale(lp) {
            return Ok(LpOutcome::Infeasible);
        }
        // drive remaining artificials out of the basis
        for r in 0..m {
            if t.basis[r] >= nv + m {
                if let Some(c) = (0..nv + m).find(|&c| t.at(r, c).abs() > opts.tol) {
                    t.pivot(r, c);
                }
            }
        }
    }

    // phase 2 objective row: reduced costs -c + c_B B^{-1} A
    let obj = m;
    for c in 0..width {
        t.cells[obj * width + c] = 0.0;
    }
    for (j, cj) in lp.objective.iter().enumerate() {
        t.cells[obj * width + j] = -cj;
    }
    for r in 0..m {
        let b = t.basis[r];
        let cb = if b < nv { lp.objective[b] } else { 0.0 };
        if cb != 0.0 {
            for c in 0..width {
                let v = t.cells[r * width + c];
                t.cells[obj * width + c] += cb * v;
            }
        }
    }
    if !t.optimize(nv + m, opts)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![0.0; nv];
    for r in 0..m {
        if t.basis[r] < nv {
            x[t.basis[r]] = t.rhs(r);
        }
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpOutcome::Optimal { x, value })
}

fn scale(lp: &LinearProgram) -> f64 {
    lp.rhs.iter().fold(1.0f64, |acc, b| acc.max(b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(obj: &[f64], rows: &[&[f64]], rhs: &[f64]) -> LinearProgram {
        LinearProgram {
            objective: obj.to_vec(),
            rows: rows.iter().map(|r| r.to_vec()).collect(),
            rhs: rhs.to_vec(),
        }
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 → (2, 6), 36
        let p = lp(&[3.0, 5.0], &[&[1.0, 0.0], &[0.0, 2.0], &[3.0, 2.0]], &[4.0, 12.0, 18.0]);
        match solve(&p, &SimplexOptions::default()).unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
                assert!((value - 36.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn needs_phase_one() {
        // max -x - y, x + y >= 2 (i.e. -x - y <= -2), x <= 5 → value -2
        let p = lp(&[-1.0, -1.0], &[&[-1.0, -1.0], &[1.0, 0.0]], &[-2.0, 5.0]);
        match solve(&p, &SimplexOptions::default()).unwrap() {
            LpOutcome::Optimal { value, x } => {
                assert!((value + 2.0).abs() < 1e-12);
                assert!(x[0] + x[1] >= 2.0 - 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = lp(&[1.0], &[&[1.0], &[-1.0]], &[1.0, -2.0]);
        assert_eq!(solve(&p, &SimplexOptions::default()).unwrap(), LpOutcome::Infeasible);
        let q = lp(&[1.0, 0.0], &[&[-1.0, 1.0]], &[1.0]);
        assert_eq!(solve(&q, &SimplexOptions::default()).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic Beale cycling example; Bland's rule must terminate.
        let p = lp(
            &[0.75, -150.0, 0.02, -6.0],
            &[&[0.25, -60.0, -0.04, 9.0], &[0.5, -90.0, -0.02, 3.0], &[0.0, 0.0, 1.0, 0.0]],
            &[0.0, 0.0, 1.0],
        );
        match solve(&p, &SimplexOptions::default()).unwrap() {
            LpOutcome::Optimal { value, .. } => assert!((value - 0.05).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pivot_cap_reported() {
        let p = lp(&[3.0, 5.0], &[&[1.0, 0.0], &[0.0, 2.0], &[3.0, 2.0]], &[4.0, 12.0, 18.0]);
        let opts = SimplexOptions { pivot_cap: 1, ..Default::default() };
        assert_eq!(solve(&p, &opts), Err(LpError::PivotCap(1)));
    }
}
