//! Kernel estimators: SVM feasibility classifier, ridge target surrogate and
//! the Matérn Gaussian process used by the Kriging baselines.

mod estimator;
mod gpr;
mod krr;
mod standardize;
mod svm;

pub use estimator::{
    train_estimator_pair, train_estimator_pair_with, Classifier, CvEntry, CvTable, EstimatorPair,
    Hyperparameters, ModelSummary, Prediction, SearchGrid,
};
pub use gpr::{train_gpr, GprModel, GprPrediction};
pub use krr::KernelRidgeRegressor;
pub use standardize::Standardizer;
pub use svm::{fit_platt, PlattSigmoid, SvmClassifier};

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `exp(-gamma * |a - b|^2)`.
#[inline]
pub fn gaussian_kernel(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

pub(crate) fn gaussian_gram(gamma: f64, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        k[i][i] = 1.0;
        for j in 0..i {
            let v = gaussian_kernel(gamma, &xs[i], &xs[j]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}
