//! Utility function steering the exploration.

use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::kernel::{squared_distance, EstimatorPair};

/// Nonnegative weights of the entropy, target and repulsion terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub s: f64,
    pub o: f64,
    pub r: f64,
}

impl WeightVector {
    pub fn new(s: f64, o: f64, r: f64) -> Result<Self> {
        let w = Self { s, o, r };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s", self.s), ("o", self.o), ("r", self.r)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidSetup(format!("weight {name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.s + self.o + self.r
    }

    pub fn is_degenerate(&self) -> bool {
        self.norm() <= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityVector {
    pub u_s: f64,
    pub u_o: f64,
    pub u_r: f64,
}

/// Binary Shannon entropy in bits.
pub fn entropy_score(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityDomain(p));
    }
    let h = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    Ok(((h(p) + h(1.0 - p)) / std::f64::consts::LN_2).clamp(0.0, 1.0))
}

/// Predicted target rescaled onto the observed valid range.
pub fn target_score(t_hat: f64, t_min: f64, t_max: f64) -> f64 {
    if t_max <= t_min {
        return 0.5;
    }
    ((t_hat - t_min) / (t_max - t_min)).clamp(0.0, 1.0)
}

/// Feature-space distance to the nearest neighbour under a Gaussian kernel.
pub fn repulsion_score<X: AsRef<[f64]>>(z: &[f64], neighbours: &[X], gamma: f64) -> f64 {
    let d2 = neighbours
        .iter()
        .map(|n| squared_distance(z, n.as_ref()))
        .fold(f64::INFINITY, f64::min);
    if d2.is_infinite() {
        return 1.0;
    }
    -(-gamma * d2).exp_m1()
}

pub fn utility(u: &UtilityVector, w: &WeightVector) -> Result<f64> {
    let norm = w.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    Ok(((w.s * u.u_s + w.o * u.u_o + w.r * u.u_r) / norm).clamp(0.0, 1.0))
}

/// Everything needed to score candidates against one trained estimator.
/// Standardized neighbours and target extremes are computed once.
#[derive(Debug, Clone)]
pub struct UtilityContext<'a> {
    estimator: &'a EstimatorPair,
    neighbours: Vec<Vec<f64>>,
    extremes: Option<(f64, f64)>,
    weights: WeightVector,
}

impl<'a> UtilityContext<'a> {
    pub fn new(estimator: &'a EstimatorPair, data: &DataSet, weights: WeightVector) -> Result<Self> {
        if weights.is_degenerate() {
            return Err(Error::DegenerateWeights);
        }
        let neighbours = estimator.standardizer().transform_all(&data.params());
        let extremes = match data.extremal_targets() {
            Ok(e) => Some(e),
            Err(Error::NoValidData) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            estimator,
            neighbours,
            extremes,
            weights,
        })
    }

    pub fn components(&self, x: &[f64]) -> UtilityVector {
        let z = self.estimator.standardizer().transform(x);
        let pred = self.estimator.predict_standardized(&z);
        let u_s = entropy_score(pred.p_valid).unwrap_or(0.0);
        let u_o = match self.extremes {
            Some((lo, hi)) => target_score(pred.target, lo, hi),
            None => 0.0,
        };
        let u_r = repulsion_score(&z, &self.neighbours, self.estimator.gamma_c());
        UtilityVector { u_s, u_o, u_r }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let u = self.components(x);
        let w = &self.weights;
        (w.s * u.u_s + w.o * u.u_o + w.r * u.u_r) / w.norm()
    }
}

/// One-shot utility of `x`; prefer [`UtilityContext`] in loops.
pub fn evaluate_utility(estimator: &EstimatorPair, data: &DataSet, x: &[f64], weights: &WeightVector) -> Result<f64> {
    Ok(UtilityContext::new(estimator, data, *weights)?.evaluate(x))
}
