//! Partition-problem reduction to a ball instance with `m = 2n`.
//!
//! For nonzero integers `a`, pick `t* in (0, 1)` with `g(t*) = 0`, set
//!
//! ```text
//! beta(t)  = (1 - sqrt(1 - t)) / (t sqrt(1 - t))
//! gamma(t) = 2 beta(t) + t beta(t)^2
//! Lambda   = Diag(1/2 + sqrt(1 + 4 a_i^2 gamma) / 2)
//! L        = Lambda^(-1/2) (I + beta Lambda^(-1/2) a a^T Lambda^(-1/2))
//! ```
//!
//! and take the points `+-L_i` (rows of `L`, all of unit norm). The optimum
//! of the resulting instance is `2 - 2/sqrt(Tr Lambda)` exactly when `a`
//! admits a balanced signing, and strictly smaller otherwise.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::instance::{DispersionInstance, Geometry};
use crate::oracle;
use crate::{Error, Result};

pub const ENUMERATION_LIMIT: usize = 22;
pub const DEFAULT_TOLERANCE: f64 = 1e-13;
const BRACKET: (f64, f64) = (1e-10, 1.0 - 1e-10);
const BISECTION_ITER: usize = 200;

/// `beta(t)`, written as `1 / ((1 + sqrt(1 - t)) sqrt(1 - t))` to avoid
/// cancellation near `t = 0`.
pub fn beta(t: f64) -> f64 {
    let s = (1.0 - t).sqrt();
    1.0 / ((1.0 + s) * s)
}

pub fn gamma(t: f64) -> f64 {
    let b = beta(t);
    2.0 * b + t * b * b
}

fn lambda_entry(ai: f64, gamma: f64) -> f64 {
    0.5 + 0.5 * (1.0 + 4.0 * ai * ai * gamma).sqrt()
}

fn check_weights(a: &[i64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("partition vector is empty".into()));
    }
    if let Some(i) = a.iter().position(|&v| v == 0) {
        return Err(Error::InvalidArgument(format!("entry {i} of the partition vector is zero")));
    }
    Ok(())
}

/// `g(t) = t - sum_i 2 a_i^2 / (1 + sqrt(1 + 4 a_i^2 gamma(t)))`.
pub fn g_of_t(a: &[i64], t: f64) -> Result<f64> {
    check_weights(a)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("t = {t} is outside (0, 1)")));
    }
    let gm = gamma(t);
    let sum: f64 = a
        .iter()
        .map(|&ai| {
            let a2 = (ai as f64).powi(2);
            2.0 * a2 / (1.0 + (1.0 + 4.0 * a2 * gm).sqrt())
        })
        .sum();
    Ok(t - sum)
}

#[derive(Debug, Clone, Serialize)]
pub struct HardnessArtifact {
    pub a: Vec<i64>,
    pub t_star: f64,
    pub beta_val: f64,
    pub gamma_val: f64,
    pub lambda_diag: Vec<f64>,
    /// Row-major `L`.
    pub l: Vec<Vec<f64>>,
    pub instance: DispersionInstance,
    pub g_residual: f64,
}

/// Residuals of the construction's algebraic identities.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// `|gamma - 2 beta - t* beta^2|`.
    pub gamma_residual: f64,
    /// `max_i |Lambda_ii - 1/2 - sqrt(1 + 4 a_i^2 gamma)/2|`.
    pub lambda_residual: f64,
    /// `max_i | ||L_i|| - 1 |`.
    pub row_norm_residual: f64,
    /// `max |L L^T (Lambda - a a^T) - I|`.
    pub inverse_residual: f64,
    /// `|a^T Lambda^-1 a - t*|`.
    pub trace_residual: f64,
    pub g_residual: f64,
    pub trace_lambda: f64,
    pub partition_feasible: bool,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.gamma_residual <= 1e-12
            && self.lambda_residual <= 1e-12
            && self.row_norm_residual <= 1e-8
            && self.inverse_residual <= 1e-7
            && self.trace_residual <= 1e-8
    }
}

impl HardnessArtifact {
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn trace_lambda(&self) -> f64 {
        self.lambda_diag.iter().sum()
    }

    pub fn l_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |r, c| self.l[r][c])
    }

    /// `(Lambda - a a^T) / 4`, whose hypercube maximum encodes partition
    /// feasibility.
    pub fn bqp_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |r, c| {
            let d = if r == c { self.lambda_diag[r] } else { 0.0 };
            (d - self.a[r] as f64 * self.a[c] as f64) / 4.0
        })
    }

    /// `2 - 2 / sqrt(Tr Lambda)`, the optimum when `a` has a balanced signing.
    pub fn feasible_value(&self) -> f64 {
        2.0 - 2.0 / self.trace_lambda().sqrt()
    }

    pub fn identities(&self) -> IdentityReport {
        let n = self.n();
        let t = self.t_star;
        let a: Vec<f64> = self.a.iter().map(|&v| v as f64).collect();
        let lambda_residual = a
            .iter()
            .zip(&self.lambda_diag)
            .map(|(ai, li)| (li - lambda_entry(*ai, self.gamma_val)).abs())
            .fold(0.0, f64::max);
        let row_norm_residual = self
            .l
            .iter()
            .map(|row| (row.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        let l = self.l_matrix();
        let av = DVector::from_vec(a.clone());
        let shifted = DMatrix::from_diagonal(&DVector::from_vec(self.lambda_diag.clone())) - &av * av.transpose();
        let product = &l * l.transpose() * shifted - DMatrix::<f64>::identity(n, n);
        let inverse_residual = product.amax();
        let quad: f64 = a.iter().zip(&self.lambda_diag).map(|(ai, li)| ai * ai / li).sum();
        IdentityReport {
            gamma_residual: (self.gamma_val - 2.0 * self.beta_val - t * self.beta_val.powi(2)).abs(),
            lambda_residual,
            row_norm_residual,
            inverse_residual,
            trace_residual: (quad - t).abs(),
            g_residual: self.g_residual,
            trace_lambda: self.trace_lambda(),
            partition_feasible: partition_feasible(&self.a),
        }
    }
}

/// Builds the reduction for `a`, bisecting `g` on `[1e-10, 1 - 1e-10]` until
/// `|g(t*)| <= tol` or the bracket collapses.
pub fn build_hardness(a: &[i64], tol: f64) -> Result<HardnessArtifact> {
    check_weights(a)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let (mut lo, mut hi) = BRACKET;
    let (g_lo, g_hi) = (g_of_t(a, lo)?, g_of_t(a, hi)?);
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::Bisection(format!("no sign change: g(lo) = {g_lo}, g(hi) = {g_hi}")));
    }
    let mut best = if g_lo.abs() < g_hi.abs() { (lo, g_lo) } else { (hi, g_hi) };
    for _ in 0..BISECTION_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g_of_t(a, mid)?;
        if gm.abs() < best.1.abs() {
            best = (mid, gm);
        }
        if gm.abs() <= tol {
            break;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (t_star, g_star) = best;
    if g_star.abs() > tol {
        return Err(Error::Bisection(format!("|g(t*)| = {:e} exceeds {tol:e}", g_star.abs())));
    }

    let n = a.len();
    let af: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let beta_val = beta(t_star);
    let gamma_val = gamma(t_star);
    let lambda_diag: Vec<f64> = af.iter().map(|&ai| lambda_entry(ai, gamma_val)).collect();
    // u = Lambda^(-1/2) a, L = Lambda^(-1/2) (I + beta u u^T).
    let u: Vec<f64> = af.iter().zip(&lambda_diag).map(|(ai, li)| ai / li.sqrt()).collect();
    let l: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let s = 1.0 / lambda_diag[r].sqrt();
            (0..n)
                .map(|c| s * (f64::from(u8::from(r == c)) + beta_val * u[r] * u[c]))
                .collect()
        })
        .collect();
    let points: Vec<Vec<f64>> = l
        .iter()
        .cloned()
        .chain(l.iter().map(|row| row.iter().map(|v| -v).collect()))
        .collect();
    let instance = DispersionInstance::unweighted(n, Geometry::Ball, points)?;
    Ok(HardnessArtifact {
        a: a.to_vec(),
        t_star,
        beta_val,
        gamma_val,
        lambda_diag,
        l,
        instance,
        g_residual: g_star.abs(),
    })
}

/// Whether some signing `x in {-1, 1}^n` has `a^T x = 0`.
pub fn partition_feasible(a: &[i64]) -> bool {
    let mut sums = BTreeSet::from([0i64]);
    for &ai in a {
        sums = sums.iter().flat_map(|s| [s + ai, s - ai]).collect();
    }
    sums.contains(&0)
}

/// `max x^T Q x` over `{-1, 1}^n` with the maximizer.
///
/// Fixes `x_0 = 1` by symmetry and walks the remaining `2^(n-1)` vectors in
/// Gray-code order, updating `Qx` in `O(n)` per flip.
pub fn bqp_enumerate_argmax(q: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let n = q.nrows();
    if n == 0 || q.ncols() != n {
        return Err(Error::InvalidArgument("matrix must be square and nonempty".into()));
    }
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut x = vec![1.0; n];
    let mut qx: Vec<f64> = (0..n).map(|r| q.row(r).sum()).collect();
    let mut val: f64 = qx.iter().sum();
    let mut best = (val, x.clone());
    for step in 1u64..(1u64 << (n - 1)) {
        let k = step.trailing_zeros() as usize + 1;
        let delta = -2.0 * x[k];
        val += 2.0 * delta * qx[k] + delta * delta * q[(k, k)];
        x[k] = -x[k];
        for (r, v) in qx.iter_mut().enumerate() {
            *v += delta * q[(r, k)];
        }
        if val > best.0 {
            best = (val, x.clone());
        }
    }
    let xv = DVector::from_vec(best.1.clone());
    let exact = xv.dot(&(q * &xv));
    Ok((exact, best.1))
}

pub fn bqp_enumerate(q: &DMatrix<f64>) -> Result<f64> {
    Ok(bqp_enumerate_argmax(q)?.0)
}

/// `v(QCQP)` as a function of `v(BQP)`: `2 - 1/sqrt(v)` for `v >= 1`, else 1.
pub fn qcqp_closed_form(v_bqp: f64) -> f64 {
    if v_bqp >= 1.0 {
        2.0 - 1.0 / v_bqp.sqrt()
    } else {
        1.0
    }
}

/// `max_{s in [-3, 1]} min((1 - s)^2 v, 1) + s` by a coarse grid and a fine
/// grid around the coarse winner.
pub fn qcqp_grid_oracle(v_bqp: f64) -> f64 {
    let h = |s: f64| ((1.0 - s).powi(2) * v_bqp).min(1.0) + s;
    let grid_max = |lo: f64, hi: f64, steps: usize| {
        (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .map(|s| (h(s), s))
            .fold((f64::NEG_INFINITY, lo), |a, b| if b.0 > a.0 { b } else { a })
    };
    let (_, s0) = grid_max(-3.0, 1.0, 4000);
    let (v, _) = grid_max((s0 - 2e-3).max(-3.0), (s0 + 2e-3).min(1.0), 40_000);
    v
}

/// `v(QCQP)` for positive definite `Q` via enumeration and the closed form.
pub fn qcqp_value(q: &DMatrix<f64>) -> Result<f64> {
    if q.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(qcqp_closed_form(bqp_enumerate(q)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub oracle_value: f64,
    /// `v(QCQP)` predicted from `v(BQP)` of `(Lambda - a a^T)/4`.
    pub predicted_value: f64,
    pub bqp_value: f64,
    pub feasible_value: f64,
    pub trace_lambda: f64,
    pub partition_feasible: bool,
    /// `|f(x) - f(-x)|` at the oracle point.
    pub symmetry_residual: f64,
}

impl ReductionReport {
    pub fn discrepancy(&self) -> f64 {
        (self.oracle_value - self.predicted_value).abs()
    }
}

pub const REDUCTION_LIMIT: usize = 12;

/// Compares the oracle optimum of the emitted instance with the value
/// predicted by enumeration.
pub fn verify_reduction(artifact: &HardnessArtifact, budget: u64, rng: &mut impl Rng) -> Result<ReductionReport> {
    let n = artifact.n();
    if n > REDUCTION_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: REDUCTION_LIMIT,
        });
    }
    let bqp_value = bqp_enumerate(&artifact.bqp_matrix())?;
    let oracle = oracle::solve_global(&artifact.instance, budget, rng);
    let neg: Vec<f64> = oracle.x_best.iter().map(|v| -v).collect();
    Ok(ReductionReport {
        oracle_value: oracle.value,
        predicted_value: qcqp_closed_form(bqp_value),
        bqp_value,
        feasible_value: artifact.feasible_value(),
        trace_lambda: artifact.trace_lambda(),
        partition_feasible: partition_feasible(&artifact.a),
        symmetry_residual: (artifact.instance.value(&neg) - oracle.value).abs(),
    })
}
