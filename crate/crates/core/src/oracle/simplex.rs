//! Dense two-phase simplex for small linear programs.
//!
//! `maximize cᵀx subject to Ax ≤ b, x ≥ 0`, any sign of `b`. Pivoting uses
//! Bland's lowest-index rule, so the path is deterministic and cannot cycle.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Feasibility and optimality tolerance.
pub const LP_TOL: f64 = 1e-9;

const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows × (cols + 1)`, the last column is the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.t[r * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize, obj: &mut [f64]) {
        let w = self.cols + 1;
        let p = self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.t.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[pc];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[pc] = 0.0;
            }
        }
        let f = obj[pc];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the reduced-cost row `obj` (maximizing;
    /// `obj[j] > 0` means column `j` improves). Columns with `allowed[j]`
    /// false never enter.
    fn optimize(&mut self, obj: &mut [f64], allowed: &[bool]) -> Result<()> {
        loop {
            let entering = (0..self.cols).find(|&j| allowed[j] && obj[j] > LP_TOL);
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > LP_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - LP_TOL * (1.0 + lratio.abs())
                                || (ratio <= lratio + LP_TOL * (1.0 + lratio.abs()) && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leave else {
                return Err(Error::Unbounded);
            };
            if self.pivots >= MAX_PIVOTS {
                return Err(Error::IterationLimit { iterations: self.pivots });
            }
            self.pivot(pr, pc, obj);
        }
    }
}

/// Solves `max cᵀx, Ax ≤ b, x ≥ 0`; `a` is row-major `b.len() × c.len()`.
pub fn maximize(c: &[f64], a: &[f64], b: &[f64]) -> Result<LpSolution> {
    let (m, n) = (b.len(), c.len());
    if a.len() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            found: a.len(),
        });
    }
    if c.iter().chain(a).chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "linear program" });
    }
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let art = negative.len();
    // columns: x (n), slack/surplus (m), artificials (art)
    let cols = n + m + art;
    let w = cols + 1;
    let mut tab = Tableau {
        rows: m,
        cols,
        t: alloc::vec![0.0; m * w],
        basis: alloc::vec![0; m],
        pivots: 0,
    };
    let mut art_col = n + m;
    for i in 0..m {
        let row = &mut tab.t[i * w..(i + 1) * w];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[i * n + j];
        }
        row[n + i] = sign;
        row[cols] = sign * b[i];
        if b[i] < 0.0 {
            row[art_col] = 1.0;
            tab.basis[i] = art_col;
            art_col += 1;
        } else {
            tab.basis[i] = n + i;
        }
    }

    if art > 0 {
        // phase 1: maximize −Σ artificials
        let mut obj = alloc::vec![0.0; w];
        for &i in &negative {
            for (v, t) in obj.iter_mut().zip(&tab.t[i * w..(i + 1) * w]) {
                *v += t;
            }
        }
        for v in &mut obj[n + m..cols] {
            *v = 0.0;
        }
        let allowed = alloc::vec![true; cols];
        tab.optimize(&mut obj, &allowed)?;
        if obj[cols] > LP_TOL * (1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            return Err(Error::Infeasible);
        }
        // drive remaining artificials out of the basis
        for r in 0..m {
            if tab.basis[r] >= n + m {
                if let Some(pc) = (0..n + m).find(|&j| tab.at(r, j).abs() > LP_TOL) {
                    let mut dummy = alloc::vec![0.0; w];
                    tab.pivot(r, pc, &mut dummy);
                }
            }
        }
    }

    // phase 2
    let mut obj = alloc::vec![0.0; w];
    obj[..n].copy_from_slice(c);
    for r in 0..m {
        let bc = tab.basis[r];
        let f = obj[bc];
        if f != 0.0 {
            for (v, t) in obj.iter_mut().zip(&tab.t[r * w..(r + 1) * w]) {
                *v -= f * t;
            }
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < n + m).collect();
    tab.optimize(&mut obj, &allowed)?;
    let mut x = alloc::vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs(r);
        }
    }
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        x,
        objective,
        pivots: tab.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let s = maximize(&[3.0, 5.0], &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0], &[4.0, 12.0, 18.0]).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn needs_phase_one() {
        // max −x − y, x + y ≥ 2 (−x − y ≤ −2), x ≤ 3 → 2
        let s = maximize(&[-1.0, -1.0], &[-1.0, -1.0, 1.0, 0.0], &[-2.0, 3.0]).unwrap();
        assert!((s.objective + 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        assert_eq!(maximize(&[1.0], &[1.0, -1.0], &[1.0, -2.0]), Err(Error::Infeasible));
        assert_eq!(maximize(&[1.0, 0.0], &[0.0, 1.0], &[1.0]), Err(Error::Unbounded));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling example for the largest-coefficient rule
        let c = [10.0, -57.0, -9.0, -24.0];
        let a = [0.5, -5.5, -2.5, 9.0, 0.5, -1.5, -0.5, 1.0, 1.0, 0.0, 0.0, 0.0];
        let s = maximize(&c, &a, &[0.0, 0.0, 1.0]).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }
}
