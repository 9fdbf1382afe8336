//! Brute-force global maximization for small instances.
//!
//! Uniform sampling of the feasible set followed by trust-region local
//! ascent from the most promising samples. The result is a heuristic lower
//! bound on the optimum; pair it with the relaxation value for a bracket.
//!
//! Each local step maximizes the piecewise-linear model
//! `min_i f_i(x) + grad f_i(x)^T d` over a box trust region. Every `f_i` is
//! a convex quadratic, so the model never overestimates `f(x + d)`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::hardness::bqp_enumerate;
use crate::instance::{DispersionInstance, Geometry};
use crate::lp::LinearProgram;
use crate::tail::sample_sphere;
use crate::vector::{dot, norm, norm_sq};
use crate::{Error, Result};

pub const DEFAULT_BUDGET: u64 = 200_000;

/// Samples are ranked in chunks of this size; each full chunk contributes
/// its best few to the refinement set.
const CHUNK: usize = 8192;
const TOP_PER_CHUNK: usize = 4;
const MIN_RADIUS: f64 = 1e-10;
const MAX_STEPS: usize = 500;

#[derive(Debug, Clone, Serialize)]
pub struct OracleTrace {
    pub samples: u64,
    pub best_sample_value: f64,
    pub refined_candidates: usize,
    pub refinement_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub x_best: Vec<f64>,
    pub value: f64,
    pub method_trace: OracleTrace,
    /// Trust-region radius at which the winning ascent stopped. Not a
    /// certificate of global optimality.
    pub certified_radius: f64,
}

/// Best point found by `budget` uniform samples plus local refinement.
///
/// Samples are drawn sequentially from `rng` and the set of refined
/// candidates only grows with the budget, so for a fixed seed the returned
/// value is nondecreasing in `budget`.
pub fn solve_global(inst: &DispersionInstance, budget: u64, rng: &mut impl Rng) -> OracleResult {
    let n = inst.dim();
    let geometry = inst.geometry();

    // The center is always a candidate; it is optimal for symmetric instances.
    let mut candidates: Vec<(f64, Vec<f64>)> = vec![(inst.value(&vec![0.0; n]), vec![0.0; n])];
    let mut record = candidates[0].0;
    let mut chunk: Vec<(f64, Vec<f64>)> = Vec::with_capacity(CHUNK);
    let corners = corner_count(n, geometry, budget);

    for k in 0..budget {
        let x = match geometry {
            Geometry::Ball => {
                let mut x = sample_sphere(n, rng);
                if k % 2 == 1 {
                    let r = rng.random::<f64>().powf(1.0 / n as f64);
                    x.iter_mut().for_each(|v| *v *= r);
                }
                x
            }
            Geometry::Box if k < corners => corner(n, k),
            Geometry::Box => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        };
        let v = inst.value(&x);
        if v > record {
            record = v;
            candidates.push((v, x.clone()));
        }
        chunk.push((v, x));
        if chunk.len() == CHUNK {
            chunk.sort_by(|a, b| b.0.total_cmp(&a.0));
            candidates.extend(chunk.drain(..).take(TOP_PER_CHUNK));
            chunk.clear();
        }
    }

    let refined: Vec<Ascent> = candidates
        .par_iter()
        .map(|(v, x)| local_ascent(inst, x.clone(), *v))
        .collect();
    let steps = refined.iter().map(|a| a.steps).sum();
    let best = refined
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("candidate set always contains the center");

    OracleResult {
        value: best.value,
        x_best: best.x,
        certified_radius: best.radius,
        method_trace: OracleTrace {
            samples: budget,
            best_sample_value: record,
            refined_candidates: candidates.len(),
            refinement_steps: steps,
        },
    }
}

fn corner_count(n: usize, geometry: Geometry, budget: u64) -> u64 {
    if geometry != Geometry::Box || n >= 63 {
        return 0;
    }
    (1u64 << n).min(budget / 2)
}

fn corner(n: usize, k: u64) -> Vec<f64> {
    (0..n)
        .map(|j| if (k >> j) & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

struct Ascent {
    x: Vec<f64>,
    value: f64,
    radius: f64,
    steps: usize,
}

fn local_ascent(inst: &DispersionInstance, mut x: Vec<f64>, mut value: f64) -> Ascent {
    let mut radius = 0.1;
    let mut steps = 0;
    let cap = match inst.geometry() {
        Geometry::Ball => 1.0,
        Geometry::Box => 2.0,
    };
    while radius >= MIN_RADIUS && steps < MAX_STEPS {
        steps += 1;
        let Some((d, model)) = model_step(inst, &x, value, radius) else {
            break;
        };
        if model <= value + 1e-15 * value.abs().max(1.0) {
            // No ascent for the linear model at this radius means none at
            // any smaller radius either.
            break;
        }
        let mut y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
        project(inst.geometry(), &mut y);
        let fy = inst.value(&y);
        if fy > value {
            x = y;
            value = fy;
            radius = (2.0 * radius).min(cap);
        } else {
            radius *= 0.25;
        }
    }
    Ascent {
        x,
        value,
        radius,
        steps,
    }
}

fn project(geometry: Geometry, y: &mut [f64]) {
    match geometry {
        Geometry::Ball => {
            let r = norm(y);
            if r > 1.0 {
                y.iter_mut().for_each(|v| *v /= r);
            }
        }
        Geometry::Box => y.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0)),
    }
}

/// Maximizes the linear lower model over the trust region; returns the step
/// and the model value.
fn model_step(inst: &DispersionInstance, x: &[f64], value: f64, radius: f64) -> Option<(Vec<f64>, f64)> {
    let n = x.len();
    let (lo, hi): (Vec<f64>, Vec<f64>) = match inst.geometry() {
        Geometry::Ball => (vec![-radius; n], vec![radius; n]),
        Geometry::Box => x
            .iter()
            .map(|&v| ((-radius).max(-1.0 - v), radius.min(1.0 - v)))
            .unzip(),
    };
    // Variables: z = d - lo in [0, hi - lo], tau = t - floor >= 0.
    let floor = value - 1.0;
    let mut cost = vec![0.0; n + 1];
    cost[n] = 1.0;
    let mut lp = LinearProgram::new(cost);
    for (p, w) in inst.points().iter().zip(inst.weights()) {
        let fi = w * x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let grad: Vec<f64> = x.iter().zip(p).map(|(a, b)| 2.0 * w * (a - b)).collect();
        let mut row: Vec<f64> = grad.iter().map(|g| -g).collect();
        row.push(1.0);
        lp.leq(row, fi - floor + dot(&grad, &lo));
    }
    for j in 0..n {
        let mut row = vec![0.0; n + 1];
        row[j] = 1.0;
        lp.leq(row, hi[j] - lo[j]);
    }
    if inst.geometry() == Geometry::Ball {
        // Linearized ||x + d||^2 <= 1.
        let mut row: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        row.push(0.0);
        lp.leq(row, 1.0 - norm_sq(x) - 2.0 * dot(x, &lo));
    }
    let sol = lp.solve().ok()?;
    let d = sol.z[..n].iter().zip(&lo).map(|(z, l)| z + l).collect();
    Some((d, sol.z[n] + floor))
}

/// Largest point count per axis so that the box grid stays near 2e5 points.
fn grid_resolution(n: usize) -> usize {
    if n <= 4 {
        return 21;
    }
    let k = (2e5f64).powf(1.0 / n as f64).floor() as usize;
    k.max(2)
}

/// `max x^T Q x` over `{-1, 1}^n` by enumeration, spot-checked against a
/// uniform grid of `[-1, 1]^n`: for `Q` positive definite no grid point may
/// beat the best vertex.
pub fn solve_bqp_relaxcheck(q: &DMatrix<f64>) -> Result<f64> {
    if q.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let v = bqp_enumerate(q)?;
    let n = q.nrows();
    let k = grid_resolution(n);
    let axis: Vec<f64> = (0..k).map(|i| -1.0 + 2.0 * i as f64 / (k - 1) as f64).collect();
    let total = k.pow(n as u32);
    let slack = 1e-9 * v.abs().max(1.0);
    let mut x = vec![0.0; n];
    for mut idx in 0..total {
        for xj in x.iter_mut() {
            *xj = axis[idx % k];
            idx /= k;
        }
        let qx = q * nalgebra::DVector::from_column_slice(&x);
        let val = dot(&x, qx.as_slice());
        if val > v + slack {
            return Err(Error::InvalidArgument(format!(
                "grid point value {val} exceeds enumerated vertex value {v}"
            )));
        }
    }
    Ok(v)
}
