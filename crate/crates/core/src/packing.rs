//! (delta, pi)-packings and (2 delta, pi)-Hamming separations, with
//! verifiers.
//!
//! A packing requires the balls of radius `delta / pi(theta_v)` around the
//! members to be disjoint. A Hamming separation indexed by `{-1, 1}^d`
//! requires `rho(theta_v, theta) >= (2 delta / pi_v) * #{j : vhat(theta)_j != v_j}`
//! for every member `v` and every point `theta` an estimator may output.

use crate::error::{Error, Result};
use crate::model::{Metric, ParamGrid};

/// Relative slack absorbed by the verifiers, so that a packing built with
/// its own maximal delta verifies despite rounding.
const REL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Packing {
    members: Vec<Vec<f64>>,
    prior_values: Vec<f64>,
    delta: f64,
    metric: Metric,
}

impl Packing {
    pub fn new(members: Vec<Vec<f64>>, prior_values: Vec<f64>, delta: f64, metric: Metric) -> Result<Self> {
        if members.len() != prior_values.len() {
            return Err(Error::LengthMismatch(members.len(), prior_values.len()));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("packing delta {delta}")));
        }
        if prior_values.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter("packing prior values must be positive".into()));
        }
        for i in 0..members.len() {
            for j in 0..i {
                if members[i] == members[j] {
                    return Err(Error::InvalidParameter(format!("packing members {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { members, prior_values, delta, metric })
    }

    /// Scalar members under the absolute-difference metric.
    pub fn scalar(points: &[f64], prior_values: Vec<f64>, delta: f64) -> Result<Self> {
        Self::new(points.iter().map(|&t| vec![t]).collect(), prior_values, delta, Metric::AbsDiff)
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn prior_values(&self) -> &[f64] {
        &self.prior_values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.members.clone(), self.prior_values.clone(), delta, self.metric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PackingCheck {
    Valid,
    /// First violating pair in index order and by how much the two radii
    /// exceed the distance.
    Violation { u: usize, v: usize, overlap: f64 },
}

impl PackingCheck {
    pub fn is_valid(self) -> bool {
        self == PackingCheck::Valid
    }
}

pub fn verify_packing(packing: &Packing) -> Result<PackingCheck> {
    if packing.metric != Metric::AbsDiff {
        return Err(Error::UnsupportedMetric(packing.metric.name()));
    }
    let d = packing.delta;
    for u in 0..packing.len() {
        for v in u + 1..packing.len() {
            let dist = (packing.members[u][0] - packing.members[v][0]).abs();
            let need = d / packing.prior_values[u] + d / packing.prior_values[v];
            if dist < need * (1.0 - REL_SLACK) {
                return Ok(PackingCheck::Violation { u, v, overlap: need - dist });
            }
        }
    }
    Ok(PackingCheck::Valid)
}

/// Verifies and turns a violation into an error.
pub fn require_packing(packing: &Packing) -> Result<()> {
    match verify_packing(packing)? {
        PackingCheck::Valid => Ok(()),
        PackingCheck::Violation { u, v, overlap } => Err(Error::PackingViolation(u, v, overlap)),
    }
}

/// Largest delta for which `{theta0, theta1}` is a (delta, pi)-packing:
/// `|theta0 - theta1| / (1/pi0 + 1/pi1)`.
pub fn max_delta_two_point(theta0: f64, theta1: f64, pi0: f64, pi1: f64) -> f64 {
    (theta0 - theta1).abs() / (1.0 / pi0 + 1.0 / pi1)
}

/// Largest delta making all scalar points a packing (minimum over pairs).
pub fn max_delta(points: &[f64], prior_values: &[f64]) -> Result<f64> {
    if points.len() != prior_values.len() {
        return Err(Error::LengthMismatch(points.len(), prior_values.len()));
    }
    if points.len() < 2 {
        return Err(Error::DegenerateIndexSet(points.len()));
    }
    let mut best = f64::INFINITY;
    for u in 0..points.len() {
        for v in u + 1..points.len() {
            best = best.min(max_delta_two_point(points[u], points[v], prior_values[u], prior_values[v]));
        }
    }
    Ok(best)
}

/// Hypercube-indexed family `theta_v = center + (scale / pi_v) v`. Member
/// `k` has `v_j = +1` exactly when bit `j` of `k` is set. The decoder is
/// `vhat(theta)_j = sign(theta_j - center_j)` with zero mapped to `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HammingSeparation {
    d: usize,
    center: Vec<f64>,
    members: Vec<Vec<f64>>,
    prior_values: Vec<f64>,
    delta: f64,
}

/// Largest supported hypercube dimension.
pub const MAX_HYPERCUBE_DIM: usize = 20;

impl HammingSeparation {
    /// Members at `center + (scale / pi_v) v`; under the L1 metric this is a
    /// (2 delta, pi)-Hamming separation with `delta = scale / 2` against any
    /// set of points.
    pub fn hypercube(center: Vec<f64>, scale: f64, prior_values: Vec<f64>) -> Result<Self> {
        let d = center.len();
        if d == 0 || d > MAX_HYPERCUBE_DIM {
            return Err(Error::InvalidParameter(format!("hypercube dimension {d}")));
        }
        if prior_values.len() != 1 << d {
            return Err(Error::LengthMismatch(prior_values.len(), 1 << d));
        }
        if prior_values.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter("hypercube prior values must be positive".into()));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("hypercube scale {scale}")));
        }
        let members = (0..1usize << d)
            .map(|k| (0..d).map(|j| center[j] + scale / prior_values[k] * sign_of_bit(k, j)).collect())
            .collect();
        Ok(Self { d, center, members, prior_values, delta: scale / 2.0 })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn prior_values(&self) -> &[f64] {
        &self.prior_values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..self.clone() }
    }

    /// Bitmask of the decoded vertex.
    pub fn decode(&self, theta: &[f64]) -> usize {
        (0..self.d).filter(|&j| theta[j] >= self.center[j]).fold(0, |k, j| k | 1 << j)
    }
}

/// `v_j` for member `k`.
pub fn sign_of_bit(k: usize, j: usize) -> f64 {
    if k >> j & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeparationCheck {
    Valid,
    Violation { vertex: usize, point: usize },
}

impl SeparationCheck {
    pub fn is_valid(self) -> bool {
        self == SeparationCheck::Valid
    }
}

/// Exhaustive L1 check over all members and all grid points.
pub fn verify_hamming_separation(sep: &HammingSeparation, grid: &ParamGrid) -> Result<SeparationCheck> {
    if grid.dim() != sep.d {
        return Err(Error::LengthMismatch(grid.dim(), sep.d));
    }
    for (vertex, member) in sep.members.iter().enumerate() {
        for (point, theta) in grid.points().enumerate() {
            let mismatches = (sep.decode(theta) ^ vertex).count_ones() as f64;
            let need = 2.0 * sep.delta / sep.prior_values[vertex] * mismatches;
            let dist = Metric::L1.distance(member, theta)?;
            if dist < need * (1.0 - REL_SLACK) {
                return Ok(SeparationCheck::Violation { vertex, point });
            }
        }
    }
    Ok(SeparationCheck::Valid)
}

pub fn require_separation(sep: &HammingSeparation, grid: &ParamGrid) -> Result<()> {
    match verify_hamming_separation(sep, grid)? {
        SeparationCheck::Valid => Ok(()),
        SeparationCheck::Violation { vertex, point } => Err(Error::SeparationViolation { vertex, point }),
    }
}

/// Largest delta for which the members of `sep` separate `grid`.
pub fn max_delta_hamming(sep: &HammingSeparation, grid: &ParamGrid) -> Result<f64> {
    if grid.dim() != sep.d {
        return Err(Error::LengthMismatch(grid.dim(), sep.d));
    }
    let mut best = f64::INFINITY;
    for (vertex, member) in sep.members.iter().enumerate() {
        for theta in grid.points() {
            let mismatches = (sep.decode(theta) ^ vertex).count_ones();
            if mismatches > 0 {
                let dist = Metric::L1.distance(member, theta)?;
                best = best.min(dist * sep.prior_values[vertex] / (2.0 * mismatches as f64));
            }
        }
    }
    Ok(best)
}
