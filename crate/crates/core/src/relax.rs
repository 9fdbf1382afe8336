//! The constant-majorant convex relaxation and its lifted SDP certificates.
//!
//! Replacing `||x||^2` in the epigraph form of the problem by
//! `mu = max ||x||^2` over the region (1 on the ball, `n` on the box) gives
//!
//! ```text
//! maximize   F(x) = min_i w_i (mu - 2 (x^i)^T x + ||x^i||^2)
//! subject to x in the region
//! ```
//!
//! which is an SOCP on the ball and an LP on the box. For multipliers `l` on
//! the simplex the inner maximization has a closed form,
//!
//! ```text
//! U(l) = sum_i l_i w_i (mu + ||x^i||^2) + 2 || sum_i l_i w_i x^i ||_*
//! ```
//!
//! with the Euclidean norm on the ball and the l1 norm on the box, so every
//! iterate comes with a certified upper bound.
//!
//! The engine is a log-barrier path-following method in the `n + 1`
//! variables `(x, zeta)`; the barrier's implicit multipliers `1 / (t g_i)`
//! feed `U`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::instance::{DispersionInstance, Geometry};
use crate::vector::{dot, norm, norm_sq};
use crate::{Error, Result};

const BARRIER_GROWTH: f64 = 8.0;
const CENTERING_TOL: f64 = 1e-12;
const MAX_OUTER: usize = 80;
const MAX_CENTERING_STEPS: usize = 60;
const STALL_LIMIT: usize = 3;

/// Optimizer, value and certified gap of the relaxation.
#[derive(Debug, Clone, Serialize)]
pub struct RelaxationResult {
    pub geometry: Geometry,
    /// Feasible maximizer.
    pub x_star: Vec<f64>,
    /// `F(x_star)`, recomputed from `x_star`.
    pub zeta_star: f64,
    /// Certified bound minus `zeta_star`; the relaxation value lies in
    /// `[zeta_star, zeta_star + gap]`.
    pub gap: f64,
    /// Newton steps taken (0 for closed-form cases).
    pub iterations: usize,
    pub converged: bool,
    /// Simplex multipliers certifying `zeta_star + gap`.
    pub multipliers: Vec<f64>,
}

impl RelaxationResult {
    pub fn upper_bound(&self) -> f64 {
        self.zeta_star + self.gap
    }
}

/// `1e-7 * max(1, U)` with `U` the bound at uniform multipliers.
pub fn default_tolerance(inst: &DispersionInstance) -> f64 {
    let m = inst.len();
    let uniform = vec![1.0 / m as f64; m];
    1e-7 * dual_bound(inst, &uniform).max(1.0)
}

/// `F(x) = min_i w_i (mu - 2 (x^i)^T x + ||x^i||^2)`.
pub fn relaxed_objective(inst: &DispersionInstance, x: &[f64]) -> f64 {
    let mu = inst.geometry().mu(inst.dim());
    inst.points()
        .iter()
        .zip(inst.weights())
        .map(|(p, w)| w * (mu - 2.0 * dot(p, x) + norm_sq(p)))
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form `max_x sum_i l_i w_i (mu - 2 (x^i)^T x + ||x^i||^2)` over the
/// region, an upper bound on the relaxation value for every `l` on the
/// simplex.
pub fn dual_bound(inst: &DispersionInstance, lambda: &[f64]) -> f64 {
    let n = inst.dim();
    let mu = inst.geometry().mu(n);
    let mut constant = 0.0;
    let mut g = vec![0.0; n];
    for ((p, w), l) in inst.points().iter().zip(inst.weights()).zip(lambda) {
        constant += l * w * (mu + norm_sq(p));
        for (gj, pj) in g.iter_mut().zip(p) {
            *gj += l * w * pj;
        }
    }
    let dual_norm = match inst.geometry() {
        Geometry::Ball => norm(&g),
        Geometry::Box => g.iter().map(|v| v.abs()).sum(),
    };
    constant + 2.0 * dual_norm
}

/// Solves the relaxation for the instance's own geometry.
pub fn solve_cr(inst: &DispersionInstance, tol: f64) -> Result<RelaxationResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if inst.len() == 1 {
        return Ok(single_point(inst));
    }
    Ok(Barrier::new(inst).solve(tol))
}

pub fn solve_cr_ball(inst: &DispersionInstance, tol: f64) -> Result<RelaxationResult> {
    if inst.geometry() != Geometry::Ball {
        return Err(Error::WrongGeometry { expected: "ball" });
    }
    solve_cr(inst, tol)
}

pub fn solve_cr_box(inst: &DispersionInstance, tol: f64) -> Result<RelaxationResult> {
    if inst.geometry() != Geometry::Box {
        return Err(Error::WrongGeometry { expected: "box" });
    }
    solve_cr(inst, tol)
}

/// With one point `F` is affine: move straight away from it.
fn single_point(inst: &DispersionInstance) -> RelaxationResult {
    let p = &inst.points()[0];
    let x_star: Vec<f64> = match inst.geometry() {
        Geometry::Ball => {
            let r = norm(p);
            if r > 0.0 {
                p.iter().map(|v| -v / r).collect()
            } else {
                vec![0.0; p.len()]
            }
        }
        Geometry::Box => p
            .iter()
            .map(|&v| if v > 0.0 { -1.0 } else if v < 0.0 { 1.0 } else { 0.0 })
            .collect(),
    };
    let zeta_star = relaxed_objective(inst, &x_star);
    let multipliers = vec![1.0];
    let gap = (dual_bound(inst, &multipliers) - zeta_star).max(0.0);
    RelaxationResult {
        geometry: inst.geometry(),
        x_star,
        zeta_star,
        gap,
        iterations: 0,
        converged: true,
        multipliers,
    }
}

/// Log-barrier method for `max zeta` s.t. `g_i = c_i - 2 b_i^T x - zeta > 0`
/// and `x` strictly inside the region.
struct Barrier<'a> {
    inst: &'a DispersionInstance,
    n: usize,
    c: Vec<f64>,
    b: Vec<Vec<f64>>,
}

impl<'a> Barrier<'a> {
    fn new(inst: &'a DispersionInstance) -> Self {
        let n = inst.dim();
        let mu = inst.geometry().mu(n);
        let c = inst
            .points()
            .iter()
            .zip(inst.weights())
            .map(|(p, w)| w * (mu + norm_sq(p)))
            .collect();
        let b = inst
            .points()
            .iter()
            .zip(inst.weights())
            .map(|(p, w)| p.iter().map(|v| w * v).collect())
            .collect();
        Self { inst, n, c, b }
    }

    fn slacks(&self, x: &[f64], zeta: f64) -> Option<Vec<f64>> {
        let g: Vec<f64> = self
            .c
            .iter()
            .zip(&self.b)
            .map(|(c, b)| c - 2.0 * dot(b, x) - zeta)
            .collect();
        g.iter().all(|&v| v > 0.0).then_some(g)
    }

    fn region_interior(&self, x: &[f64]) -> bool {
        match self.inst.geometry() {
            Geometry::Ball => norm_sq(x) < 1.0,
            Geometry::Box => x.iter().all(|v| v.abs() < 1.0),
        }
    }

    /// Barrier objective `-t zeta - sum log g_i - log(region)`, or `None`
    /// outside the domain.
    fn phi(&self, t: f64, y: &[f64]) -> Option<f64> {
        let (x, zeta) = y.split_at(self.n);
        let zeta = zeta[0];
        if !self.region_interior(x) {
            return None;
        }
        let g = self.slacks(x, zeta)?;
        let region = match self.inst.geometry() {
            Geometry::Ball => -(1.0 - norm_sq(x)).ln(),
            Geometry::Box => x.iter().map(|v| -(1.0 - v).ln() - (1.0 + v).ln()).sum(),
        };
        Some(-t * zeta - g.iter().map(|v| v.ln()).sum::<f64>() + region)
    }

    fn grad_hess(&self, t: f64, y: &[f64], g: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let x = &y[..n];
        let mut grad = DVector::zeros(n + 1);
        let mut hess = DMatrix::zeros(n + 1, n + 1);
        grad[n] = -t;
        let mut a = DVector::zeros(n + 1);
        for (b, &gi) in self.b.iter().zip(g) {
            for j in 0..n {
                a[j] = 2.0 * b[j];
            }
            a[n] = 1.0;
            grad.axpy(1.0 / gi, &a, 1.0);
            hess.ger(1.0 / (gi * gi), &a, &a, 1.0);
        }
        match self.inst.geometry() {
            Geometry::Ball => {
                let h = 1.0 - norm_sq(x);
                for j in 0..n {
                    grad[j] += 2.0 * x[j] / h;
                    hess[(j, j)] += 2.0 / h;
                    for k in 0..n {
                        hess[(j, k)] += 4.0 * x[j] * x[k] / (h * h);
                    }
                }
            }
            Geometry::Box => {
                for j in 0..n {
                    let (up, lo) = (1.0 - x[j], 1.0 + x[j]);
                    grad[j] += 1.0 / up - 1.0 / lo;
                    hess[(j, j)] += 1.0 / (up * up) + 1.0 / (lo * lo);
                }
            }
        }
        (grad, hess)
    }

    fn newton_direction(grad: &DVector<f64>, hess: DMatrix<f64>) -> Option<DVector<f64>> {
        let rhs = -grad;
        if let Some(chol) = hess.clone().cholesky() {
            return Some(chol.solve(&rhs));
        }
        hess.lu().solve(&rhs)
    }

    /// Minimizes the barrier objective for fixed `t`; returns steps taken.
    fn center(&self, t: f64, y: &mut Vec<f64>, budget: usize) -> usize {
        let n = self.n;
        for step in 0..budget {
            let Some(g) = self.slacks(&y[..n], y[n]) else {
                return step;
            };
            let (grad, hess) = self.grad_hess(t, y, &g);
            let Some(dir) = Self::newton_direction(&grad, hess) else {
                return step;
            };
            let slope = grad.dot(&dir);
            if -slope / 2.0 <= CENTERING_TOL || !slope.is_finite() {
                return step;
            }
            // Self-concordant damped step: 1/(1 + lambda) stays in the domain
            // and decreases the barrier without comparing its values, which
            // lose resolution once `t zeta` is large.
            let lambda = (-slope).sqrt();
            let mut s = if lambda <= 0.25 { 1.0 } else { 1.0 / (1.0 + lambda) };
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = y.iter().zip(dir.iter()).map(|(v, d)| v + s * d).collect();
                if self.phi(t, &trial).is_some() {
                    *y = trial;
                    moved = true;
                    break;
                }
                s *= 0.5;
            }
            if !moved {
                return step + 1;
            }
        }
        budget
    }

    fn solve(&self, tol: f64) -> RelaxationResult {
        let n = self.n;
        let m = self.c.len();
        let budget = (200 * m * n).max(2000);
        let x0 = vec![0.0; n];
        let f0 = relaxed_objective(self.inst, &x0);
        let scale = self.c.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
        let mut y = x0.clone();
        y.push(f0 - 0.1 * scale);

        let mut best_x = x0;
        let mut best_f = f0;
        let mut best_lambda = vec![1.0 / m as f64; m];
        let mut best_u = dual_bound(self.inst, &best_lambda);
        let mut t = (m + 1) as f64 / scale;
        let mut iterations = 0;
        let mut last_gap = f64::INFINITY;
        let mut stalled = 0;

        for _ in 0..MAX_OUTER {
            let stage = MAX_CENTERING_STEPS.min(budget.saturating_sub(iterations));
            iterations += self.center(t, &mut y, stage);
            let x = &y[..n];
            let f = relaxed_objective(self.inst, x);
            if f > best_f {
                best_f = f;
                best_x = x.to_vec();
            }
            if let Some(g) = self.slacks(x, y[n]) {
                let raw: Vec<f64> = g.iter().map(|gi| 1.0 / (t * gi)).collect();
                let total: f64 = raw.iter().sum();
                if total > 0.0 && total.is_finite() {
                    let lambda: Vec<f64> = raw.iter().map(|v| v / total).collect();
                    let u = dual_bound(self.inst, &lambda);
                    if u < best_u {
                        best_u = u;
                        best_lambda = lambda;
                    }
                }
            }
            let gap = best_u - best_f;
            if gap <= tol || iterations >= budget {
                break;
            }
            // Past the point where slack cancellation dominates the
            // multiplier estimates the certified gap stops shrinking.
            if gap > 0.5 * last_gap {
                stalled += 1;
                if stalled >= STALL_LIMIT {
                    break;
                }
            } else {
                stalled = 0;
            }
            last_gap = last_gap.min(gap);
            t *= BARRIER_GROWTH;
        }

        let gap = (best_u - best_f).max(0.0);
        RelaxationResult {
            geometry: self.inst.geometry(),
            x_star: best_x,
            zeta_star: best_f,
            gap,
            iterations,
            converged: gap <= tol,
            multipliers: best_lambda,
        }
    }
}

/// Symmetric `(n+1) x (n+1)` matrix feasible for the SDP relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMatrix {
    entries: DMatrix<f64>,
}

/// Residuals of the SDP-feasibility conditions for a [`LiftedMatrix`].
#[derive(Debug, Clone, Serialize)]
pub struct LiftCheck {
    pub min_eigenvalue: f64,
    pub spectral_norm: f64,
    /// Ball: `|sum_j Z_jj - Z_{n+1,n+1}|`; box: `max_j |Z_jj - Z_{n+1,n+1}|`.
    pub cone_residual: f64,
    /// `min_i w_i Tr(A^i Z)`.
    pub min_constraint: f64,
}

impl LiftCheck {
    pub fn holds(&self) -> bool {
        self.min_eigenvalue >= -1e-9 * self.spectral_norm.max(1.0)
            && self.cone_residual <= 1e-9
            && self.min_constraint >= 1.0 - 1e-9
    }
}

impl LiftedMatrix {
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() < 2 {
            return Err(Error::InvalidArgument("lifted matrix must be square, size >= 2".into()));
        }
        Ok(Self { entries })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `n`, one less than the matrix order.
    pub fn dim(&self) -> usize {
        self.entries.nrows() - 1
    }

    /// `Z_{n+1,n+1}`.
    pub fn corner(&self) -> f64 {
        let n = self.dim();
        self.entries[(n, n)]
    }

    /// `Z_11, ..., Z_nn`.
    pub fn diagonal_block(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.entries[(j, j)]).collect()
    }

    /// `Tr(A^i Z) = Tr(Z_top) - 2 p^T z + ||p||^2 Z_{n+1,n+1}`.
    pub fn trace_against(&self, p: &[f64]) -> f64 {
        let n = self.dim();
        let top: f64 = self.diagonal_block().iter().sum();
        let cross: f64 = (0..n).map(|j| p[j] * self.entries[(j, n)]).sum();
        top - 2.0 * cross + norm_sq(p) * self.corner()
    }

    pub fn check(&self, inst: &DispersionInstance) -> LiftCheck {
        let eig = self.entries.clone().symmetric_eigen();
        let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let spectral_norm = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diag = self.diagonal_block();
        let corner = self.corner();
        let cone_residual = match inst.geometry() {
            Geometry::Ball => (diag.iter().sum::<f64>() - corner).abs(),
            Geometry::Box => diag.iter().fold(0.0f64, |a, d| a.max((d - corner).abs())),
        };
        let min_constraint = inst
            .points()
            .iter()
            .zip(inst.weights())
            .map(|(p, w)| w * self.trace_against(p))
            .fold(f64::INFINITY, f64::min);
        LiftCheck {
            min_eigenvalue,
            spectral_norm,
            cone_residual,
            min_constraint,
        }
    }

    /// Maps the matrix back to a relaxation-feasible pair
    /// `(z / Z_{n+1,n+1}, 1 / Z_{n+1,n+1})`, valid for any matrix satisfying
    /// the SOCP constraints.
    pub fn to_relaxation_point(&self) -> Result<(Vec<f64>, f64)> {
        let corner = self.corner();
        if !(corner > 0.0) {
            return Err(Error::NonPositiveRelaxation(corner));
        }
        let n = self.dim();
        let x = (0..n).map(|j| self.entries[(j, n)] / corner).collect();
        Ok((x, 1.0 / corner))
    }
}

fn outer_lift(x_star: &[f64], zeta: f64, diag_correction: impl Fn(usize) -> f64) -> LiftedMatrix {
    let n = x_star.len();
    let mut v = x_star.to_vec();
    v.push(1.0);
    let v = DVector::from_vec(v);
    let mut z = &v * v.transpose();
    for j in 0..n {
        z[(j, j)] += diag_correction(j);
    }
    z /= zeta;
    LiftedMatrix { entries: z }
}

fn check_lift_input(result: &RelaxationResult, inst: &DispersionInstance) -> Result<()> {
    inst.check_dim(&result.x_star)?;
    if !(result.zeta_star > 0.0) {
        return Err(Error::NonPositiveRelaxation(result.zeta_star));
    }
    Ok(())
}

/// `(1/zeta) ([x;1][x;1]^T + Diag(1 - x_1^2, ..., 1 - x_n^2, 0))`.
pub fn lift_box(result: &RelaxationResult, inst: &DispersionInstance) -> Result<LiftedMatrix> {
    if inst.geometry() != Geometry::Box {
        return Err(Error::WrongGeometry { expected: "box" });
    }
    check_lift_input(result, inst)?;
    let x = &result.x_star;
    Ok(outer_lift(x, result.zeta_star, |j| 1.0 - x[j] * x[j]))
}

/// `(1/zeta) ([x;1][x;1]^T + blockdiag((1 - ||x||^2)/n I, 0))`.
pub fn lift_ball(result: &RelaxationResult, inst: &DispersionInstance) -> Result<LiftedMatrix> {
    if inst.geometry() != Geometry::Ball {
        return Err(Error::WrongGeometry { expected: "ball" });
    }
    check_lift_input(result, inst)?;
    let x = &result.x_star;
    let spread = (1.0 - norm_sq(x)) / x.len() as f64;
    Ok(outer_lift(x, result.zeta_star, |_| spread))
}

/// Lift matching the instance's geometry.
pub fn lift(result: &RelaxationResult, inst: &DispersionInstance) -> Result<LiftedMatrix> {
    match inst.geometry() {
        Geometry::Ball => lift_ball(result, inst),
        Geometry::Box => lift_box(result, inst),
    }
}

/// `max_j Z_jj / sum_j Z_jj` over the top-left `n x n` block.
pub fn gamma1(z: &LiftedMatrix) -> Result<f64> {
    let diag = z.diagonal_block();
    let total: f64 = diag.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTrace);
    }
    Ok(diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) / total)
}
