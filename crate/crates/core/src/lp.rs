//! Small dense linear programs.
//!
//! Two-phase tableau simplex with Bland's rule for
//!
//! ```text
//! maximize c^T z   subject to   A z <= b,   z >= 0
//! ```
//!
//! with `b` of either sign. Sizes in this crate stay in the tens of rows and
//! columns, so a dense tableau is the right tool.

use crate::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;

/// Optimal point and value of a [`LinearProgram`].
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub z: Vec<f64>,
    pub objective: f64,
}

/// `maximize c^T z  s.t.  rows[k]^T z <= rhs[k],  z >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    cost: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>) -> Self {
        Self {
            cost,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    /// Adds `row^T z <= rhs`.
    pub fn leq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        debug_assert_eq!(row.len(), self.cost.len());
        self.rows.push(row);
        self.rhs.push(rhs);
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run()
    }
}

struct Tableau {
    nvars: usize,
    ncols: usize,
    nrows: usize,
    /// `nrows` constraint rows then the objective row; last column is the rhs.
    data: Vec<f64>,
    basis: Vec<usize>,
    artificial_start: usize,
    cost: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let nvars = lp.num_vars();
        let nrows = lp.rows.len();
        let negative: Vec<usize> = (0..nrows).filter(|&k| lp.rhs[k] < 0.0).collect();
        let artificial_start = nvars + nrows;
        let ncols = artificial_start + negative.len();
        let width = ncols + 1;
        let mut data = vec![0.0; (nrows + 1) * width];
        let mut basis = vec![0; nrows];
        let mut next_art = artificial_start;
        for k in 0..nrows {
            let sign = if lp.rhs[k] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut data[k * width..(k + 1) * width];
            for (j, a) in lp.rows[k].iter().enumerate() {
                row[j] = sign * a;
            }
            row[nvars + k] = sign;
            row[ncols] = sign * lp.rhs[k];
            if sign < 0.0 {
                row[next_art] = 1.0;
                basis[k] = next_art;
                next_art += 1;
            } else {
                basis[k] = nvars + k;
            }
        }
        Self {
            nvars,
            ncols,
            nrows,
            data,
            basis,
            artificial_start,
            cost: lp.cost.clone(),
        }
    }

    fn width(&self) -> usize {
        self.ncols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let p = self.at(pr, pc);
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        for r in 0..=self.nrows {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor != 0.0 {
                for c in 0..w {
                    self.data[r * w + c] -= factor * self.data[pr * w + c];
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Loads `maximize obj^T z` into the objective row as reduced costs.
    fn load_objective(&mut self, obj: &[f64]) {
        let w = self.width();
        let z = self.nrows * w;
        for c in 0..w {
            self.data[z + c] = 0.0;
        }
        for (j, &cj) in obj.iter().enumerate() {
            self.data[z + j] = -cj;
        }
        for r in 0..self.nrows {
            let cb = obj.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for c in 0..w {
                    self.data[z + c] += cb * self.data[r * w + c];
                }
            }
        }
    }

    /// Bland's rule iterations over columns `< allowed`.
    fn iterate(&mut self, allowed: usize) -> Result<()> {
        let scale = 1.0 + (0..self.nrows).map(|r| self.at(r, self.ncols).abs()).fold(0.0, f64::max);
        let max_iter = 50 * (self.nrows + self.ncols + 10);
        for _ in 0..max_iter {
            let Some(pc) = (0..allowed).find(|&c| self.at(self.nrows, c) < -PIVOT_EPS) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.nrows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.at(r, self.ncols) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tie = (ratio - bratio).abs() <= PIVOT_EPS * scale;
                            if ratio < bratio - PIVOT_EPS * scale
                                || (tie && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = best else {
                return Err(Error::Lp("unbounded"));
            };
            self.pivot(pr, pc);
        }
        Err(Error::Lp("cycling or iteration limit"))
    }

    fn run(mut self) -> Result<LpSolution> {
        if self.artificial_start < self.ncols {
            let phase1: Vec<f64> = (0..self.ncols)
                .map(|c| if c >= self.artificial_start { -1.0 } else { 0.0 })
                .collect();
            self.load_objective(&phase1);
            self.iterate(self.ncols)?;
            let infeasibility = -self.at(self.nrows, self.ncols);
            let scale = 1.0 + (0..self.nrows).map(|r| self.at(r, self.ncols).abs()).fold(0.0, f64::max);
            if infeasibility > 1e-9 * scale {
                return Err(Error::Lp("infeasible"));
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            for r in 0..self.nrows {
                if self.basis[r] >= self.artificial_start {
                    if let Some(pc) =
                        (0..self.artificial_start).find(|&c| self.at(r, c).abs() > PIVOT_EPS)
                    {
                        self.pivot(r, pc);
                    }
                }
            }
        }
        let cost = self.cost.clone();
        self.load_objective(&cost);
        self.iterate(self.artificial_start)?;
        let mut z = vec![0.0; self.nvars];
        for r in 0..self.nrows {
            if self.basis[r] < self.nvars {
                z[self.basis[r]] = self.at(r, self.ncols).max(0.0);
            }
        }
        let objective = cost.iter().zip(&z).map(|(c, v)| c * v).sum();
        Ok(LpSolution { z, objective })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(vec![3.0, 5.0]);
        lp.leq(vec![1.0, 0.0], 4.0)
            .leq(vec![0.0, 2.0], 12.0)
            .leq(vec![3.0, 2.0], 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.z[0] - 2.0).abs() < 1e-12 && (s.z[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // max -x - y, x + y >= 2 (i.e. -x - y <= -2), x <= 3
        let mut lp = LinearProgram::new(vec![-1.0, -1.0]);
        lp.leq(vec![-1.0, -1.0], -2.0).leq(vec![1.0, 0.0], 3.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.leq(vec![1.0], 1.0).leq(vec![-1.0], -2.0);
        assert!(matches!(lp.solve(), Err(Error::Lp("infeasible"))));

        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.leq(vec![0.0, 1.0], 1.0);
        assert!(matches!(lp.solve(), Err(Error::Lp("unbounded"))));
    }

    #[test]
    fn degenerate_cone_is_handled() {
        // x - y <= 0, -x + y <= 0, x <= 1: max x -> 1 on the ray x = y.
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.leq(vec![1.0, -1.0], 0.0)
            .leq(vec![-1.0, 1.0], 0.0)
            .leq(vec![1.0, 0.0], 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.z[1] - 1.0).abs() < 1e-12);
    }
}
