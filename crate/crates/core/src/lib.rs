//! Weighted maximin dispersion over the unit ball and the box `[-1, 1]^n`.
//!
//! Given points `x^1, ..., x^m` in `R^n` with positive weights `w_i`, the
//! problem is to find a feasible `x` maximizing
//!
//! ```text
//! f(x) = min_i  w_i * ||x - x^i||^2
//! ```
//!
//! The crate provides:
//!
//! - [`relax`]: the convex relaxation obtained by replacing `||x||^2` with its
//!   constant majorant `mu` (1 on the ball, `n` on the box), solved with a
//!   closed-form duality-gap certificate, plus the lifted PSD matrices that
//!   realize its equivalence with the SDP/SOCP relaxations.
//! - [`exact`]: the polynomial-time case on the ball when the sign system
//!   `(x^i)^T x <= 0` has a nonzero solution.
//! - [`tail`]: the spherical-cap tail `S(n, alpha)`, its inverse and a uniform
//!   sphere sampler.
//! - [`approx`]: the randomized rounding algorithms and their bounds.
//! - [`hardness`]: instances encoding the integer partition problem.
//! - [`oracle`]: desk-scale sampling + local refinement ground truth.
//! - [`bench`]: the seeded comparison harness.

pub mod approx;
pub mod bench;
mod error;
pub mod exact;
pub mod hardness;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod relax;
pub mod rng;
pub mod tail;
mod vector;

pub use error::{Error, Result};
pub use instance::{DispersionInstance, Evaluation, Geometry};
