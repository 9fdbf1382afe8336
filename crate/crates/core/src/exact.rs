//! Exact solution on the ball when the sign system has a nonzero solution.
//!
//! If some `d != 0` satisfies `(x^i)^T d <= 0` for every `i`, pushing the
//! relaxation optimizer `x*` along `d` to the unit sphere can only increase
//! every term `w_i (1 - 2 (x^i)^T x + ||x^i||^2)`, and on the sphere those
//! terms equal the true objective. The relaxation is then tight and the
//! pushed point is globally optimal.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::instance::{DispersionInstance, Geometry};
use crate::lp::LinearProgram;
use crate::relax::{self, RelaxationResult};
use crate::vector::{dot, norm, norm_sq};
use crate::{Error, Result};

/// Below this (on unit-normalized rows) a coordinate's LP maximum counts as 0.
pub const ZERO_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct ExactResult {
    /// Unit-norm global maximizer `x* + alpha d`.
    pub x_opt: Vec<f64>,
    pub value: f64,
    /// Nonzero `d` with `(x^i)^T d <= 0` for all `i`.
    pub certificate: Vec<f64>,
    pub alpha: f64,
    pub relaxation: RelaxationResult,
}

#[derive(Debug, Clone, Serialize)]
pub enum ExactOutcome {
    Optimal(ExactResult),
    /// The sign system admits only the zero solution.
    NotApplicable,
}

impl ExactOutcome {
    pub fn optimal(self) -> Option<ExactResult> {
        match self {
            ExactOutcome::Optimal(r) => Some(r),
            ExactOutcome::NotApplicable => None,
        }
    }
}

/// A unit vector `d` with `(x^i)^T d <= 0` for all `i`, or `None` if only
/// `d = 0` solves the system.
///
/// With `m <= n` the direction comes from the orthogonal complement of the
/// first `m - 1` points, sign-corrected against the last. Otherwise each
/// coordinate is maximized in both signs over the cone truncated to
/// `||d||_inf <= 1`.
pub fn find_sign_direction(inst: &DispersionInstance) -> Result<Option<Vec<f64>>> {
    if inst.geometry() != Geometry::Ball {
        return Err(Error::WrongGeometry { expected: "ball" });
    }
    let n = inst.dim();
    let m = inst.len();
    if m <= n {
        return Ok(Some(complement_direction(inst.points())));
    }

    let rows: Vec<Vec<f64>> = inst
        .points()
        .iter()
        .filter_map(|p| {
            let r = norm(p);
            (r > 0.0).then(|| p.iter().map(|v| v / r).collect())
        })
        .collect();
    if rows.is_empty() {
        return Ok(Some(unit(n, 0)));
    }

    // Shift x = z - 1 so that z >= 0 and the box becomes z <= 2.
    let mut lp_rows = Vec::with_capacity(rows.len() + n);
    for r in &rows {
        lp_rows.push((r.clone(), r.iter().sum::<f64>()));
    }
    for j in 0..n {
        lp_rows.push((unit(n, j), 2.0));
    }
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut cost = vec![0.0; n];
            cost[k] = sign;
            let mut lp = LinearProgram::new(cost);
            for (row, rhs) in &lp_rows {
                lp.leq(row.clone(), *rhs);
            }
            let sol = lp.solve()?;
            let x: Vec<f64> = sol.z.iter().map(|z| z - 1.0).collect();
            if sign * x[k] > ZERO_THRESHOLD {
                let r = norm(&x);
                return Ok(Some(x.iter().map(|v| v / r).collect()));
            }
        }
    }
    Ok(None)
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

fn complement_direction(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points[0].len();
    let m = points.len();
    let last = &points[m - 1];
    if m == 1 {
        let r = norm(last);
        return if r > 0.0 {
            last.iter().map(|v| -v / r).collect()
        } else {
            unit(n, 0)
        };
    }
    // Householder QR of [x^1 ... x^{m-1} 0 ... 0]: trailing columns of Q are
    // orthogonal to every leading column whatever their rank.
    let a = DMatrix::from_fn(n, n, |r, c| if c < m - 1 { points[c][r] } else { 0.0 });
    let q = a.qr().q();
    let hat: Vec<f64> = q.column(n - 1).iter().copied().collect();
    let s = dot(last, &hat);
    if s > 0.0 {
        hat.iter().map(|v| -v).collect()
    } else {
        hat
    }
}

/// `alpha >= 0` with `||x + alpha d|| = 1`, for `||x|| <= 1`.
pub fn boundary_step(x: &[f64], d: &[f64]) -> f64 {
    let p = dot(x, d);
    let dd = norm_sq(d);
    let radicand = (dd * (1.0 - norm_sq(x)) + p * p).max(0.0);
    ((-p + radicand.sqrt()) / dd).max(0.0)
}

/// Global optimum of the ball problem when a sign direction exists.
pub fn solve_exact(inst: &DispersionInstance, tol: f64) -> Result<ExactOutcome> {
    let Some(direction) = find_sign_direction(inst)? else {
        return Ok(ExactOutcome::NotApplicable);
    };
    let relaxation = relax::solve_cr_ball(inst, tol)?;
    let x_star = &relaxation.x_star;
    let alpha = boundary_step(x_star, &direction);
    let x_opt: Vec<f64> = x_star
        .iter()
        .zip(&direction)
        .map(|(x, d)| x + alpha * d)
        .collect();
    let value = inst.value(&x_opt);
    Ok(ExactOutcome::Optimal(ExactResult {
        x_opt,
        value,
        certificate: direction,
        alpha,
        relaxation,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(points: Vec<Vec<f64>>) -> DispersionInstance {
        let n = points[0].len();
        DispersionInstance::unweighted(n, Geometry::Ball, points).unwrap()
    }

    fn satisfies(inst: &DispersionInstance, d: &[f64]) -> bool {
        norm(d) > 0.5 && inst.points().iter().all(|p| dot(p, d) <= 1e-10)
    }

    #[test]
    fn two_point_line_has_no_direction() {
        let inst = ball(vec![vec![1.0], vec![-1.0]]);
        assert!(find_sign_direction(&inst).unwrap().is_none());
        assert!(matches!(solve_exact(&inst, 1e-9).unwrap(), ExactOutcome::NotApplicable));
    }

    #[test]
    fn few_points_always_have_a_direction() {
        let inst = ball(vec![vec![1.0, 2.0, 0.5], vec![-1.0, 0.3, 2.0], vec![0.2, 0.2, 0.2]]);
        let d = find_sign_direction(&inst).unwrap().unwrap();
        assert!(satisfies(&inst, &d));

        let inst = ball(vec![vec![0.4, -0.3]]);
        let d = find_sign_direction(&inst).unwrap().unwrap();
        assert!(satisfies(&inst, &d));
    }

    #[test]
    fn half_space_points_are_separated() {
        // Every point has positive inner product with g = (1, 1, 0).
        let inst = ball(vec![
            vec![1.0, 0.2, 0.5],
            vec![0.3, 1.0, -0.7],
            vec![0.5, 0.5, 0.0],
            vec![2.0, -0.5, 1.0],
            vec![-0.2, 0.9, 0.3],
        ]);
        let d = find_sign_direction(&inst).unwrap().unwrap();
        assert!(satisfies(&inst, &d));
    }

    #[test]
    fn surrounding_points_have_no_direction() {
        let inst = ball(vec![
            vec![1.0, 0.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
            vec![0.0, 0.5],
        ]);
        assert!(find_sign_direction(&inst).unwrap().is_none());
    }

    #[test]
    fn degenerate_cone_along_a_line() {
        // (x^i)^T d <= 0 forces d on the ray d_1 = 0, d_2 <= 0.
        let inst = ball(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]]);
        let d = find_sign_direction(&inst).unwrap().unwrap();
        assert!(satisfies(&inst, &d));
        assert!(d[0].abs() < 1e-12 && d[1] < -0.99);
    }

    #[test]
    fn boundary_start_needs_no_step() {
        let x = [0.6, 0.8];
        assert_eq!(boundary_step(&x, &[0.6, 0.8]), 0.0);
        assert_eq!(boundary_step(&x, &[1.0, 0.0]), 0.0);
        assert!(boundary_step(&x, &[-1.0, 0.0]) > 0.0);
        let a = boundary_step(&x, &[-1.0, 0.0]);
        let y = [x[0] - a, x[1]];
        assert!((norm(&y) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_matches_relaxation() {
        let inst = ball(vec![vec![0.5, 0.1, -0.2], vec![0.3, -0.4, 0.9], vec![0.0, 0.0, 1.0]]);
        let r = solve_exact(&inst, 1e-10).unwrap().optimal().unwrap();
        assert!((norm(&r.x_opt) - 1.0).abs() < 1e-10);
        assert!(r.value >= r.relaxation.zeta_star - 1e-10);
        assert!(r.value <= r.relaxation.upper_bound() + 1e-12);
    }

    #[test]
    fn box_geometry_is_rejected() {
        let inst = DispersionInstance::unweighted(1, Geometry::Box, vec![vec![1.0]]).unwrap();
        assert!(find_sign_direction(&inst).is_err());
    }
}
