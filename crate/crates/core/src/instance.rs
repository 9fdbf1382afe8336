//! Problem data, objective evaluation and random instance generation.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::vector::{dist_sq, norm_sq};
use crate::{Error, Result};

/// Feasible region of the dispersion problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// `{x : ||x|| <= 1}`
    Ball,
    /// `[-1, 1]^n`
    Box,
}

impl Geometry {
    /// `max ||x||^2` over the feasible region.
    pub fn mu(self, dim: usize) -> f64 {
        match self {
            Geometry::Ball => 1.0,
            Geometry::Box => dim as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Ball => "ball",
            Geometry::Box => "box",
        }
    }

    /// Whether `x` lies in the region up to `slack`.
    pub fn contains(self, x: &[f64], slack: f64) -> bool {
        match self {
            Geometry::Ball => norm_sq(x).sqrt() <= 1.0 + slack,
            Geometry::Box => x.iter().all(|v| v.abs() <= 1.0 + slack),
        }
    }
}

/// `m` weighted points in `R^n` together with the feasible region.
///
/// Immutable after construction; every constructor validates that the
/// dimension and point count are positive, all points have length `dim`, and
/// all weights are strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct DispersionInstance {
    dim: usize,
    geometry: Geometry,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    dim: usize,
    geometry: Geometry,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl TryFrom<RawInstance> for DispersionInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        match raw.weights {
            Some(w) => Self::new(raw.dim, raw.geometry, raw.points, w),
            None => Self::unweighted(raw.dim, raw.geometry, raw.points),
        }
    }
}

impl From<DispersionInstance> for RawInstance {
    fn from(inst: DispersionInstance) -> Self {
        RawInstance {
            dim: inst.dim,
            geometry: inst.geometry,
            points: inst.points,
            weights: Some(inst.weights),
        }
    }
}

/// Result of [`DispersionInstance::evaluate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub point: Vec<f64>,
    pub value: f64,
    /// Smallest index attaining the minimum.
    pub argmin_index: usize,
}

impl DispersionInstance {
    pub fn new(
        dim: usize,
        geometry: Geometry,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidInstance("at least one point is required".into()));
        }
        if weights.len() != points.len() {
            return Err(Error::InvalidInstance(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInstance("non-finite coordinate".into()));
            }
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        Ok(Self {
            dim,
            geometry,
            points,
            weights,
        })
    }

    /// All weights equal to one.
    pub fn unweighted(dim: usize, geometry: Geometry, points: Vec<Vec<f64>>) -> Result<Self> {
        let weights = vec![1.0; points.len()];
        Self::new(dim, geometry, points, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same points and weights over a different feasible region.
    pub fn with_geometry(&self, geometry: Geometry) -> Self {
        Self {
            geometry,
            ..self.clone()
        }
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `f(x) = min_i w_i ||x - x^i||^2`. Feasibility of `x` is not required.
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.check_dim(x)?;
        let (argmin_index, value) = self.min_term(x);
        Ok(Evaluation {
            point: x.to_vec(),
            value,
            argmin_index,
        })
    }

    /// Objective value only; `x` must have length `dim`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.min_term(x).1
    }

    fn min_term(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, (p, w)) in self.points.iter().zip(&self.weights).enumerate() {
            let v = w * dist_sq(x, p);
            if v < best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// `m` points i.i.d. uniform on `[-1, 1]^n` with unit weights.
    pub fn generate_random(
        n: usize,
        m: usize,
        geometry: Geometry,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("n and m must be positive".into()));
        }
        let points = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        Self::unweighted(n, geometry, points)
    }

    /// [`generate_random`](Self::generate_random) on the ball from a seed.
    pub fn generate_seeded(n: usize, m: usize, seed: u64) -> Result<Self> {
        Self::generate_random(n, m, Geometry::Ball, &mut crate::rng::seeded(seed))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> DispersionInstance {
        DispersionInstance::unweighted(1, Geometry::Ball, vec![vec![1.0], vec![-1.0]]).unwrap()
    }

    #[test]
    fn evaluate_two_point_center() {
        let e = two_point().evaluate(&[0.0]).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.argmin_index, 0);
    }

    #[test]
    fn evaluate_at_data_point_is_zero() {
        let e = two_point().evaluate(&[1.0]).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.argmin_index, 0);
    }

    #[test]
    fn evaluate_three_points() {
        let inst = DispersionInstance::unweighted(
            2,
            Geometry::Ball,
            vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![1.0, 5.0]],
        )
        .unwrap();
        let e = inst.evaluate(&[0.0, 0.0]).unwrap();
        assert_eq!(e.value, 5.0);
        assert_eq!(e.argmin_index, 0);
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        assert!(matches!(
            two_point().evaluate(&[0.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let a = DispersionInstance::generate_seeded(5, 6, 11).unwrap();
        let b = DispersionInstance::generate_seeded(5, 6, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.points().iter().flatten().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn generated_coordinates_are_centered() {
        let inst = DispersionInstance::generate_seeded(5, 30, 3).unwrap();
        let all: Vec<f64> = inst.points().iter().flatten().copied().collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let se = (2.0 / 12f64.sqrt()) / (all.len() as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn json_round_trip_and_default_weights() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let inst = DispersionInstance::new(
            2,
            Geometry::Box,
            vec![vec![0.5, -0.25], vec![1.0, 2.0]],
            vec![2.0, 0.5],
        )
        .unwrap();
        inst.write_json(&path).unwrap();
        assert_eq!(DispersionInstance::read_json(&path).unwrap(), inst);

        let parsed =
            DispersionInstance::from_json(r#"{"dim":1,"geometry":"ball","points":[[1],[-1]]}"#)
                .unwrap();
        assert_eq!(parsed.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn json_rejects_zero_weight() {
        let err = DispersionInstance::from_json(
            r#"{"dim":1,"geometry":"ball","points":[[1],[-1]],"weights":[1,0]}"#,
        );
        assert!(err.is_err());
    }

    #[test]
    fn json_rejects_short_point() {
        let err = DispersionInstance::from_json(
            r#"{"dim":2,"geometry":"ball","points":[[1,0],[-1]]}"#,
        );
        assert!(err.is_err());
        assert!(DispersionInstance::from_json("{not json").is_err());
    }
}
