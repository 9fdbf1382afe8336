//! Spherical-cap tail probabilities and uniform sphere sampling.
//!
//! For `eta` uniform on the sphere of radius `sqrt(n)` and any `b != 0`,
//! `Pr(b^T eta >= alpha ||b||) = S(n, alpha)` with
//!
//! ```text
//!            int_{alpha/sqrt(n)}^1 (1 - t^2)^((n-3)/2) dt
//! S(n, a) = ---------------------------------------------- ,  alpha <= sqrt(n)
//!              2 int_0^1 (1 - t^2)^((n-3)/2) dt
//! ```
//!
//! and `S = 0` beyond `sqrt(n)`. Substituting `t = sin(theta)` turns both
//! integrals into `int cos^(n-2)`, which obeys the reduction
//! `I_k = (k-1)/k I_{k-2} - cos^(k-1)(a) sin(a) / k`; the ratio to the full
//! quarter-period integral is accumulated directly so nothing under- or
//! overflows for large `n`. Tails below `1e-3` are integrated directly with
//! adaptive Gauss-Legendre, which keeps relative accuracy as `S -> 0`.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::vector::norm;
use crate::{Error, Result};

/// Decay constant of the Gaussian majorant `S(n, a) < exp(-0.45 a^2)`.
pub const GAUSSIAN_BOUND_RATE: f64 = 0.45;

/// Checkpoints used to certify the majorant for `n < 40`.
pub const CHECKPOINTS: [f64; 6] = [0.0, 1.2, 2.9, 3.8, 4.9, 6.3];

const INVERSE_TOL: f64 = 1e-10;
const INVERSE_MAX_ITER: usize = 200;

/// A forward `(n, alpha) -> S` or inverse `(n, beta) -> alpha` evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailQuery {
    pub n: usize,
    pub alpha: f64,
    /// `S(n, alpha)`, in `[0, 1/2]`.
    pub value: f64,
}

impl TailQuery {
    pub fn forward(n: usize, alpha: f64) -> Result<Self> {
        Ok(Self {
            n,
            alpha,
            value: tail_s(n, alpha)?,
        })
    }

    pub fn inverse(n: usize, beta: f64) -> Result<Self> {
        let alpha = tail_s_inverse(n, beta)?;
        Ok(Self {
            n,
            alpha,
            value: beta,
        })
    }
}

/// `S(n, alpha)` to absolute accuracy well below `1e-10`.
pub fn tail_s(n: usize, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("tail requires n >= 2, got {n}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
    }
    let u = alpha / (n as f64).sqrt();
    if u > 1.0 {
        return Ok(0.0);
    }
    Ok((0.5 * cap_ratio(n - 2, u)).clamp(0.0, 0.5))
}

/// `int_{asin u}^{pi/2} cos^k / int_0^{pi/2} cos^k`.
fn cap_ratio(k: usize, u: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let c2 = (1.0 - u * u).max(0.0);
    // ratio R_j, full integral W_j and cos^(j+1)(asin u) at the parity base j
    let (mut j, mut ratio, mut full, mut cpow) = if k % 2 == 0 {
        (0, (FRAC_PI_2 - u.asin()) / FRAC_PI_2, FRAC_PI_2, c2.sqrt())
    } else {
        (1, 1.0 - u, 1.0, c2)
    };
    while j + 2 <= k {
        j += 2;
        // R_j = R_{j-2} - cos^(j-1) u / ((j-1) W_{j-2})
        ratio -= cpow * u / ((j - 1) as f64 * full);
        full *= (j - 1) as f64 / j as f64;
        cpow *= c2;
    }
    if ratio < SMALL_TAIL {
        // The recursion subtracts; small tails lose relative accuracy there.
        // int_{asin u}^{pi/2} cos^k = int_0^{acos u} sin^k
        let top = ((1.0 - u) * (1.0 + u)).max(0.0).sqrt().atan2(u);
        return integrate_sin_power(k, top) / full;
    }
    ratio
}

const SMALL_TAIL: f64 = 1e-3;

/// `int_0^b sin^k` by adaptive 20-point Gauss-Legendre.
fn integrate_sin_power(k: usize, b: f64) -> f64 {
    let f = |t: f64| t.sin().powi(k as i32);
    let whole = gauss_legendre(&f, 0.0, b);
    let floor = 1e-15 * whole.abs();
    adaptive(&f, 0.0, b, whole, floor, 24)
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, floor: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gauss_legendre(f, a, mid);
    let right = gauss_legendre(f, mid, b);
    let halves = left + right;
    if depth == 0 || (halves - whole).abs() <= (1e-13 * halves.abs()).max(floor) {
        return halves;
    }
    adaptive(f, a, mid, left, floor, depth - 1) + adaptive(f, mid, b, right, floor, depth - 1)
}

fn gauss_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (half, center) = (0.5 * (b - a), 0.5 * (a + b));
    legendre_rule()
        .iter()
        .map(|&(x, w)| w * f(center + half * x))
        .sum::<f64>()
        * half
}

/// Nodes and weights of the 20-point rule, by Newton on `P_20`.
fn legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 20;
        (0..N)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=N {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

/// `alpha` in `(0, sqrt(n))` with `S(n, alpha) = beta`, by bisection.
pub fn tail_s_inverse(n: usize, beta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("tail requires n >= 2, got {n}")));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "beta must lie in (0, 0.5), got {beta}"
        )));
    }
    let (mut lo, mut hi) = (0.0, (n as f64).sqrt());
    for _ in 0..INVERSE_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = tail_s(n, mid)?;
        if s > beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let residual = (tail_s(n, alpha)? - beta).abs();
    if residual > INVERSE_TOL {
        return Err(Error::Bisection(format!(
            "S({n}, {alpha}) misses {beta} by {residual}"
        )));
    }
    Ok(alpha)
}

/// Upper estimate `sqrt((20/9) ln(1/beta))` of the inverse tail.
pub fn inverse_upper_estimate(beta: f64) -> f64 {
    (20.0 / 9.0 * (1.0 / beta).ln()).sqrt()
}

/// Uniform draw from the unit sphere in `R^n` (normalized Gaussian).
pub fn sample_sphere(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(n >= 1, "sphere dimension must be positive");
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&v);
        if r > 0.0 && r.is_finite() {
            v.iter_mut().for_each(|x| *x /= r);
            return v;
        }
    }
}

/// Outcome of [`tail_bound_check`].
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub points_checked: usize,
    /// `min exp(-0.45 a^2) - S(n, a)` over the grid.
    pub min_margin: f64,
    pub worst_n: usize,
    pub worst_alpha: f64,
    pub violations: Vec<(usize, f64)>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates `S(n, a) < exp(-0.45 a^2)` on every grid point.
pub fn tail_bound_check(
    n_range: impl IntoIterator<Item = usize>,
    alpha_grid: &[f64],
) -> Result<BoundReport> {
    let mut report = BoundReport {
        points_checked: 0,
        min_margin: f64::INFINITY,
        worst_n: 0,
        worst_alpha: f64::NAN,
        violations: Vec::new(),
    };
    for n in n_range {
        for &alpha in alpha_grid {
            let margin = (-GAUSSIAN_BOUND_RATE * alpha * alpha).exp() - tail_s(n, alpha)?;
            report.points_checked += 1;
            if margin < report.min_margin {
                report.min_margin = margin;
                report.worst_n = n;
                report.worst_alpha = alpha;
            }
            if !(margin > 0.0) {
                report.violations.push((n, alpha));
            }
        }
    }
    Ok(report)
}

/// One link `max_n S(n, x_k) < exp(-0.45 x_{k+1}^2)` of the checkpoint chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainLink {
    pub left: f64,
    pub right: f64,
    pub max_tail: f64,
    pub majorant: f64,
}

impl ChainLink {
    pub fn holds(&self) -> bool {
        self.max_tail < self.majorant
    }
}

/// Checkpoint chain over `n in 2..=n_max`; the bound on `[x_k, x_{k+1}]`
/// follows from monotonicity of both sides.
pub fn checkpoint_chain(checkpoints: &[f64], n_max: usize) -> Result<Vec<ChainLink>> {
    checkpoints
        .windows(2)
        .map(|w| {
            Ok(ChainLink {
                left: w[0],
                right: w[1],
                max_tail: max_tail(w[0], n_max)?,
                majorant: (-GAUSSIAN_BOUND_RATE * w[1] * w[1]).exp(),
            })
        })
        .collect()
}

/// `max_{2 <= n <= n_max} S(n, alpha)`.
pub fn max_tail(alpha: f64, n_max: usize) -> Result<f64> {
    (2..=n_max).try_fold(0.0f64, |acc, n| Ok(acc.max(tail_s(n, alpha)?)))
}

/// Checkpoints `0 = x_1 < x_2 < ...` with `max_n S(n, x_k) < exp(-0.45 x_{k+1}^2)`
/// for every link, ending at or beyond `sqrt(n_max)` where all tails vanish.
///
/// Each step goes 99% of the way to the largest admissible next point, so
/// every link holds with margin.
pub fn greedy_checkpoints(n_max: usize) -> Result<Vec<f64>> {
    let end = (n_max as f64).sqrt();
    let mut points = vec![0.0];
    let mut x = 0.0f64;
    while x < end {
        let m = max_tail(x, n_max)?;
        if m == 0.0 {
            break;
        }
        let reach = (-m.ln() / GAUSSIAN_BOUND_RATE).sqrt();
        if !(reach > x) {
            return Err(Error::Bisection(format!("majorant fails at alpha = {x}")));
        }
        x += 0.99 * (reach - x);
        points.push(x);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_chain_holds_and_covers() {
        let points = greedy_checkpoints(39).unwrap();
        assert!(*points.last().unwrap() >= 39f64.sqrt());
        let links = checkpoint_chain(&points, 39).unwrap();
        assert!(links.iter().all(|l| l.holds()));
    }

    #[test]
    fn closed_form_in_the_plane() {
        assert!((tail_s(2, 1.0).unwrap() - 0.25).abs() < 1e-15);
        for &a in &[0.1, 0.7, 1.3] {
            let expect = (a / 2f64.sqrt()).acos() / std::f64::consts::PI;
            assert!((tail_s(2, a).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn three_dimensional_cap_is_linear() {
        // (n-3)/2 = 0: S = (1 - a/sqrt(3)) / 2 (Archimedes).
        for &a in &[0.0, 0.5, 1.0, 1.7] {
            let expect = 0.5 * (1.0 - a / 3f64.sqrt());
            assert!((tail_s(3, a).unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn endpoints() {
        for n in 2..=60 {
            assert_eq!(tail_s(n, 0.0).unwrap(), 0.5);
            assert_eq!(tail_s(n, (n as f64).sqrt() + 0.1).unwrap(), 0.0);
            assert!(tail_s(n, (n as f64).sqrt()).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(tail_s(1, 0.5).is_err());
        assert!(tail_s(3, -0.5).is_err());
        assert!(tail_s_inverse(3, 0.5).is_err());
        assert!(tail_s_inverse(3, 0.0).is_err());
        assert!(tail_s_inverse(1, 0.2).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        assert!((tail_s_inverse(2, 0.25).unwrap() - 1.0).abs() < 1e-9);
        for &n in &[2, 5, 40] {
            for &beta in &[0.01, 0.1, 0.4] {
                let a = tail_s_inverse(n, beta).unwrap();
                assert!(a > 0.0 && a < (n as f64).sqrt());
                assert!((tail_s(n, a).unwrap() - beta).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn inverse_below_log_estimate() {
        for n in [2, 3, 5, 10, 25, 60, 200] {
            for &beta in &[1e-6, 1e-4, 0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.45, 0.49] {
                let a = tail_s_inverse(n, beta).unwrap();
                assert!(a < inverse_upper_estimate(beta), "n={n} beta={beta}");
            }
        }
    }

    #[test]
    fn strictly_decreasing() {
        for n in [2, 3, 4, 7, 30] {
            let top = (n as f64).sqrt();
            let mut prev = tail_s(n, 0.0).unwrap();
            for k in 1..400 {
                let s = tail_s(n, top * k as f64 / 400.0).unwrap();
                assert!(s < prev, "n={n} k={k}");
                prev = s;
            }
        }
    }

    #[test]
    fn sphere_samples_are_unit() {
        let mut rng = crate::rng::seeded(1);
        for n in [1, 2, 5, 40] {
            for _ in 0..100 {
                let v = sample_sphere(n, &mut rng);
                assert!((norm(&v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_alpha_endpoint_passes_bound() {
        let r = tail_bound_check(2..=5, &[0.0]).unwrap();
        assert!(r.passed());
        assert!((r.min_margin - 0.5).abs() < 1e-15);
    }
}
