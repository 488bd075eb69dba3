use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{gaussian_gram, gaussian_kernel};

/// Gaussian-kernel ridge regression in dual form:
/// `t(x) = sum_i w_i k(x, x_i)` with `(K + lambda I) w = t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelRidgeRegressor {
    inputs: Vec<Vec<f64>>,
    weights: Vec<f64>,
    gamma: f64,
    lambda: f64,
}

impl KernelRidgeRegressor {
    pub fn fit(inputs: &[Vec<f64>], targets: &[f64], gamma: f64, lambda: f64) -> Self {
        assert_eq!(inputs.len(), targets.len());
        assert!(!inputs.is_empty(), "ridge regression needs at least one point");
        let gram = gaussian_gram(gamma, inputs);
        let all: Vec<usize> = (0..inputs.len()).collect();
        let weights = solve_ridge(&gram, &all, targets, lambda);
        Self {
            inputs: inputs.to_vec(),
            weights,
            gamma,
            lambda,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.inputs
            .iter()
            .zip(&self.weights)
            .map(|(xi, w)| w * gaussian_kernel(self.gamma, x, xi))
            .sum()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }
}

/// Dual weights for the sub-problem `idx` of a Gram matrix. `targets` is
/// indexed like the Gram matrix.
pub(crate) fn solve_ridge(gram: &[Vec<f64>], idx: &[usize], targets: &[f64], lambda: f64) -> Vec<f64> {
    let n = idx.len();
    let a = DMatrix::from_fn(n, n, |r, c| gram[idx[r]][idx[c]] + if r == c { lambda } else { 0.0 });
    let b = DVector::from_iterator(n, idx.iter().map(|&i| targets[i]));
    let w = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        // K is PSD, so K + lambda I is SPD; LU only guards against round-off.
        None => a.lu().solve(&b).expect("ridge system is nonsingular"),
    };
    w.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_shrunk() {
        let m = KernelRidgeRegressor::fit(&[vec![0.3, -1.0]], &[2.0], 1.0, 0.5);
        assert!((m.predict(&[0.3, -1.0]) - 2.0 / 1.5).abs() < 1e-14);
    }

    #[test]
    fn residual_is_tiny() {
        let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.3, (i as f64).sin()]).collect();
        let ts: Vec<f64> = xs.iter().map(|x| x[0] - 2.0 * x[1]).collect();
        let lambda = 1e-3;
        let m = KernelRidgeRegressor::fit(&xs, &ts, 0.7, lambda);
        let tmax = ts.iter().fold(0.0f64, |a, t| a.max(t.abs()));
        for (i, xi) in xs.iter().enumerate() {
            let r = m.predict(xi) + lambda * m.weights()[i] - ts[i];
            assert!(r.abs() <= 1e-8 * tmax);
        }
    }

    #[test]
    fn small_ridge_interpolates() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let ts = [0.5, -1.0, 2.0, 0.0, 1.5, -0.5];
        let m = KernelRidgeRegressor::fit(&xs, &ts, 2.0, 1e-10);
        for (x, t) in xs.iter().zip(ts) {
            assert!((m.predict(x) - t).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_targets_are_reproduced_near_data() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.2 - 1.0]).collect();
        let c = 3.0;
        let m = KernelRidgeRegressor::fit(&xs, &vec![c; 10], 1.0, 1e-4);
        for x in &xs {
            assert!((m.predict(x) - c).abs() < 0.05 * c);
        }
    }
}
