//! Randomized approximation algorithms.
//!
//! * [`approx_ball`]: uniform sphere sampling with a tail-calibrated
//!   acceptance threshold; the output provably beats `r * v(CR_ball)`.
//! * [`approx_general_fixed`]: Rademacher rounding of the lifted relaxation
//!   matrix, with the acceptance test restricted to nonzero rows.
//! * [`approx_box_simplified`]: the same rounding on the box, where the lift
//!   is a multiple of the identity and no relaxation needs solving.

use rand::Rng;
use serde::Serialize;

use crate::instance::{DispersionInstance, Geometry};
use crate::relax::{self, LiftedMatrix};
use crate::tail::{sample_sphere, tail_s_inverse};
use crate::vector::{dot, norm};
use crate::{Error, Result};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct ApproxResult {
    pub x_tilde: Vec<f64>,
    pub f_value: f64,
    /// Draws made, including the accepted one.
    pub raw_samples: u64,
    /// 1-based index of the accepted draw.
    pub accepted_at: u64,
    pub alpha_used: f64,
    /// Guaranteed ratio to the relaxation value (may be negative for the
    /// Rademacher algorithms, in which case it guarantees nothing).
    pub bound_r: f64,
    /// Refined ratio for the ball algorithm; equals `bound_r` otherwise.
    pub refined_bound: f64,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("rho = {rho} must lie in (0, 1)")))
    }
}

/// `alpha = S^-1(n, rho/m)`, or 0 when `rho/m >= 1/2` (outside the domain
/// of the inverse; the acceptance test then asks for `(x^i)^T z < 0`).
pub fn ball_alpha(n: usize, m: usize, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let beta = rho / m as f64;
    if beta >= 0.5 {
        Ok(0.0)
    } else {
        tail_s_inverse(n, beta)
    }
}

/// `r = (1 - alpha/sqrt(n)) / 2`.
pub fn ball_ratio(n: usize, alpha: f64) -> f64 {
    0.5 * (1.0 - alpha / (n as f64).sqrt())
}

/// `alpha = sqrt(2 ln(m / rho))`.
pub fn rademacher_alpha(m: usize, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok((2.0 * (m as f64 / rho).ln()).sqrt())
}

/// `(1 - alpha sqrt(gamma_1)) / 2`.
pub fn rademacher_ratio(alpha: f64, gamma1: f64) -> f64 {
    0.5 * (1.0 - alpha * gamma1.sqrt())
}

/// Acceptance test of the ball algorithm for a unit vector `z`.
pub fn ball_accepts(inst: &DispersionInstance, alpha: f64, z: &[f64]) -> bool {
    let sqrt_n = (inst.dim() as f64).sqrt();
    inst.points().iter().all(|p| {
        let r = norm(p);
        r == 0.0 || sqrt_n * dot(p, z) < alpha * r
    })
}

pub fn approx_ball(inst: &DispersionInstance, rho: f64, rng: &mut impl Rng) -> Result<ApproxResult> {
    approx_ball_with_budget(inst, rho, DEFAULT_BUDGET, rng)
}

/// Samples unit vectors until `sqrt(n) (x^i)^T z < alpha ||x^i||` for every
/// nonzero `x^i`.
pub fn approx_ball_with_budget(
    inst: &DispersionInstance,
    rho: f64,
    budget: u64,
    rng: &mut impl Rng,
) -> Result<ApproxResult> {
    if inst.geometry() != Geometry::Ball {
        return Err(Error::WrongGeometry { expected: "ball" });
    }
    let n = inst.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("the ball algorithm needs n >= 2".into()));
    }
    let alpha = ball_alpha(n, inst.len(), rho)?;
    let refined = bound_refined(inst, rho)?;
    for draw in 1..=budget {
        let z = sample_sphere(n, rng);
        if ball_accepts(inst, alpha, &z) {
            return Ok(ApproxResult {
                f_value: inst.value(&z),
                x_tilde: z,
                raw_samples: draw,
                accepted_at: draw,
                alpha_used: alpha,
                bound_r: ball_ratio(n, alpha),
                refined_bound: refined,
            });
        }
    }
    Err(Error::BudgetExhausted { budget })
}

/// Ratio `nu/(2+nu) - 2/(2+nu) sqrt(20/(9n) ln(m/rho))`, where
/// `nu = d + 1/d` if `d = min_i ||x^i|| > 1` and 2 otherwise.
pub fn bound_refined(inst: &DispersionInstance, rho: f64) -> Result<f64> {
    if inst.geometry() != Geometry::Ball {
        return Err(Error::WrongGeometry { expected: "ball" });
    }
    check_rho(rho)?;
    let d = inst.points().iter().map(|p| norm(p)).fold(f64::INFINITY, f64::min);
    let nu = if d > 1.0 { d + 1.0 / d } else { 2.0 };
    let spread = (20.0 / (9.0 * inst.dim() as f64) * (inst.len() as f64 / rho).ln()).sqrt();
    Ok(nu / (2.0 + nu) - 2.0 / (2.0 + nu) * spread)
}

/// The Rademacher rounding scheme for a fixed diagonal scaling.
#[derive(Debug, Clone)]
pub struct RademacherRounding {
    /// `b^i_j = s_j x^i_j`, restricted to nonzero rows.
    rows: Vec<Vec<f64>>,
    row_norms: Vec<f64>,
    /// Output map `x_j = out_j xi_j`.
    out: Vec<f64>,
    pub alpha: f64,
    pub bound: f64,
}

impl RademacherRounding {
    fn new(inst: &DispersionInstance, rho: f64, scale: Vec<f64>, out: Vec<f64>, gamma1: f64) -> Result<Self> {
        let alpha = rademacher_alpha(inst.len(), rho)?;
        let mut rows = Vec::new();
        let mut row_norms = Vec::new();
        for p in inst.points() {
            let b: Vec<f64> = p.iter().zip(&scale).map(|(x, s)| x * s).collect();
            let r = norm(&b);
            if r > 0.0 {
                rows.push(b);
                row_norms.push(r);
            }
        }
        Ok(Self {
            rows,
            row_norms,
            out,
            alpha,
            bound: rademacher_ratio(alpha, gamma1),
        })
    }

    /// Uses the lift of the relaxation optimizer: `s_j = sqrt(Z_jj)` and
    /// `out_j = sqrt(Z_jj / Z_{n+1,n+1})`.
    pub fn from_lift(inst: &DispersionInstance, rho: f64, z: &LiftedMatrix) -> Result<Self> {
        let diag = z.diagonal_block();
        let corner = z.corner();
        let scale: Vec<f64> = diag.iter().map(|d| d.max(0.0).sqrt()).collect();
        let out = scale.iter().map(|s| s / corner.sqrt()).collect();
        Self::new(inst, rho, scale, out, relax::gamma1(z)?)
    }

    /// Identity scaling on the box.
    pub fn simplified(inst: &DispersionInstance, rho: f64) -> Result<Self> {
        if inst.geometry() != Geometry::Box {
            return Err(Error::WrongGeometry { expected: "box" });
        }
        let n = inst.dim();
        Self::new(inst, rho, vec![1.0; n], vec![1.0; n], 1.0 / n as f64)
    }

    pub fn accepts(&self, xi: &[f64]) -> bool {
        self.rows
            .iter()
            .zip(&self.row_norms)
            .all(|(b, r)| dot(b, xi) < self.alpha * r)
    }

    pub fn run(&self, inst: &DispersionInstance, budget: u64, rng: &mut impl Rng) -> Result<ApproxResult> {
        let n = inst.dim();
        let mut xi = vec![0.0; n];
        for draw in 1..=budget {
            xi.iter_mut()
                .for_each(|v| *v = if rng.random::<bool>() { 1.0 } else { -1.0 });
            if self.accepts(&xi) {
                let x: Vec<f64> = xi.iter().zip(&self.out).map(|(v, o)| v * o).collect();
                return Ok(ApproxResult {
                    f_value: inst.value(&x),
                    x_tilde: x,
                    raw_samples: draw,
                    accepted_at: draw,
                    alpha_used: self.alpha,
                    bound_r: self.bound,
                    refined_bound: self.bound,
                });
            }
        }
        Err(Error::BudgetExhausted { budget })
    }
}

/// Rademacher rounding of the lifted relaxation optimizer, on either
/// geometry. Zero rows of `b` are skipped in the acceptance test.
pub fn approx_general_fixed(inst: &DispersionInstance, rho: f64, rng: &mut impl Rng) -> Result<ApproxResult> {
    let cr = relax::solve_cr(inst, relax::default_tolerance(inst))?;
    let z = relax::lift(&cr, inst)?;
    RademacherRounding::from_lift(inst, rho, &z)?.run(inst, DEFAULT_BUDGET, rng)
}

pub fn approx_box_simplified(inst: &DispersionInstance, rho: f64, rng: &mut impl Rng) -> Result<ApproxResult> {
    RademacherRounding::simplified(inst, rho)?.run(inst, DEFAULT_BUDGET, rng)
}
