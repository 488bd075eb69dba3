//! The estimator pair: feasibility classifier plus target surrogate, with
//! cross-validated hyperparameters.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::krr::solve_ridge;
use super::svm::solve_dual;
use super::{gaussian_gram, KernelRidgeRegressor, PlattSigmoid, Standardizer, SvmClassifier};
use crate::data::{DataSet, Outcome};
use crate::error::{Error, Result};
use crate::seed::{rng_from, SeedSequence, Stream};

const MAX_FOLDS: usize = 5;
const FALLBACK_CONFIDENCE: f64 = 0.99;

/// Logarithmic hyperparameter grids, in standardized coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub gammas: Vec<f64>,
    pub penalties: Vec<f64>,
    pub ridges: Vec<f64>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            gammas: vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2],
            penalties: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
            ridges: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub gamma_c: f64,
    pub c: f64,
    pub gamma_r: f64,
    pub lambda: f64,
}

impl Default for Hyperparameters {
    /// Mid-grid values used before cross validation kicks in.
    fn default() -> Self {
        Self {
            gamma_c: 1.0,
            c: 10.0,
            gamma_r: 1.0,
            lambda: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub gamma: f64,
    /// `C` for the classifier, `lambda` for the regressor.
    pub penalty: f64,
    /// Mean validation accuracy, or negative mean squared error.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvTable {
    pub folds: usize,
    pub classification: Vec<CvEntry>,
    pub regression: Vec<CvEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Classifier {
    Svm(SvmClassifier),
    /// Used while only one outcome class has been observed.
    Constant { p_valid: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub outcome: Outcome,
    pub p_valid: f64,
    pub target: f64,
}

impl Prediction {
    /// Probability of the predicted outcome.
    pub fn confidence(&self) -> f64 {
        match self.outcome {
            Outcome::Valid => self.p_valid,
            Outcome::Invalid => 1.0 - self.p_valid,
        }
    }
}

/// Classifier and regressor trained on the same standardized data, with
/// invalid targets imputed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorPair {
    standardizer: Standardizer,
    classifier: Classifier,
    regressor: KernelRidgeRegressor,
    hyperparameters: Hyperparameters,
    cv: Option<CvTable>,
}

impl EstimatorPair {
    pub fn predict(&self, x: &[f64]) -> Prediction {
        self.predict_standardized(&self.standardizer.transform(x))
    }

    pub fn predict_standardized(&self, z: &[f64]) -> Prediction {
        let p_valid = match &self.classifier {
            Classifier::Svm(svm) => svm.probability_valid(z),
            Classifier::Constant { p_valid } => *p_valid,
        };
        Prediction {
            outcome: if p_valid >= 0.5 { Outcome::Valid } else { Outcome::Invalid },
            p_valid,
            target: self.regressor.predict(z),
        }
    }

    pub fn predict_outcome(&self, x: &[f64]) -> Outcome {
        self.predict(x).outcome
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    pub fn regressor(&self) -> &KernelRidgeRegressor {
        &self.regressor
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        self.hyperparameters
    }

    /// Kernel width of the classification feature space.
    pub fn gamma_c(&self) -> f64 {
        self.hyperparameters.gamma_c
    }

    pub fn cv_table(&self) -> Option<&CvTable> {
        self.cv.as_ref()
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self.classifier, Classifier::Constant { .. })
    }

    pub fn summary(&self) -> ModelSummary {
        let (support_vectors, platt, constant_p_valid) = match &self.classifier {
            Classifier::Svm(svm) => (svm.support_vectors().len(), Some(svm.platt()), None),
            Classifier::Constant { p_valid } => (0, None, Some(*p_valid)),
        };
        ModelSummary {
            hyperparameters: self.hyperparameters,
            fallback: self.is_fallback(),
            support_vectors,
            platt,
            constant_p_valid,
            training_points: self.regressor.inputs().len(),
            cv: self.cv.clone(),
        }
    }
}

/// Introspection record of a trained pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub hyperparameters: Hyperparameters,
    pub fallback: bool,
    pub support_vectors: usize,
    pub platt: Option<PlattSigmoid>,
    pub constant_p_valid: Option<f64>,
    pub training_points: usize,
    pub cv: Option<CvTable>,
}

/// [`train_estimator_pair_with`] on the default search grid.
pub fn train_estimator_pair(data: &DataSet, seed: u64) -> Result<EstimatorPair> {
    train_estimator_pair_with(data, &SearchGrid::default(), seed)
}

/// Trains the pair on all of `data`. Hyperparameters are chosen by k-fold
/// grid search once `|D| >= 2k` (k = 5); smaller sets use the defaults.
pub fn train_estimator_pair_with(data: &DataSet, grid: &SearchGrid, seed: u64) -> Result<EstimatorPair> {
    if data.is_empty() {
        return Err(Error::InvalidSetup("cannot train on an empty data set".into()));
    }
    let seeds = SeedSequence::new(seed);
    let params = data.params();
    let standardizer = Standardizer::fit(&params);
    let z = standardizer.transform_all(&params);
    let outcomes = data.outcomes();
    let targets = match data.impute_invalid_targets() {
        Ok(d) => d.targets(),
        // Without any valid point the target carries no information.
        Err(Error::NoValidData) => vec![0.0; data.len()],
        Err(e) => return Err(e),
    };

    let n = data.len();
    let k = MAX_FOLDS.min(n);
    let mut hyper = Hyperparameters::default();
    let mut cv = None;
    if n >= 2 * k {
        let folds = stratified_folds(&outcomes, k, seeds.derive(Stream::CrossValidation, 0));
        let classification = if data.has_both_classes() {
            let table = cv_classifier(&z, &outcomes, &folds, grid);
            let best = best_entry(&table, (hyper.gamma_c, hyper.c));
            hyper.gamma_c = best.gamma;
            hyper.c = best.penalty;
            table
        } else {
            Vec::new()
        };
        // Regressor CV waits for 2k valid points.
        let regression = if data.count_valid() >= 2 * k {
            let table = cv_regressor(&z, &targets, &folds, grid);
            let best = best_entry(&table, (hyper.gamma_r, hyper.lambda));
            hyper.gamma_r = best.gamma;
            hyper.lambda = best.penalty;
            table
        } else {
            Vec::new()
        };
        cv = Some(CvTable {
            folds: k,
            classification,
            regression,
        });
    }

    let classifier = if data.has_both_classes() {
        Classifier::Svm(SvmClassifier::train(
            &z,
            &outcomes,
            hyper.gamma_c,
            hyper.c,
            seeds.derive(Stream::Platt, 0),
        )?)
    } else {
        let p_valid = if data.count_valid() > 0 {
            FALLBACK_CONFIDENCE
        } else {
            1.0 - FALLBACK_CONFIDENCE
        };
        Classifier::Constant { p_valid }
    };
    let regressor = KernelRidgeRegressor::fit(&z, &targets, hyper.gamma_r, hyper.lambda);
    Ok(EstimatorPair {
        standardizer,
        classifier,
        regressor,
        hyperparameters: hyper,
        cv,
    })
}

/// Entry with the highest score. Ties go to the entry closest to `anchor`
/// on the log grid, then to the first one in grid order.
fn best_entry(table: &[CvEntry], anchor: (f64, f64)) -> CvEntry {
    let offset = |e: &CvEntry| (e.gamma / anchor.0).log10().powi(2) + (e.penalty / anchor.1).log10().powi(2);
    let mut best = table[0];
    for e in &table[1..] {
        if e.score > best.score || (e.score == best.score && offset(e) < offset(&best)) {
            best = *e;
        }
    }
    best
}

/// Shuffles each class separately and deals the members round-robin so every
/// fold sees both classes whenever possible.
fn stratified_folds(outcomes: &[Outcome], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = rng_from(seed);
    let mut valid: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i].is_valid()).collect();
    let mut invalid: Vec<usize> = (0..outcomes.len()).filter(|&i| !outcomes[i].is_valid()).collect();
    valid.shuffle(&mut rng);
    invalid.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (slot, i) in valid.into_iter().chain(invalid).enumerate() {
        folds[slot % k].push(i);
    }
    folds
}

fn complement(folds: &[Vec<usize>], held: usize) -> Vec<usize> {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != held)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect();
    train.sort_unstable();
    train
}

fn cv_classifier(z: &[Vec<f64>], outcomes: &[Outcome], folds: &[Vec<usize>], grid: &SearchGrid) -> Vec<CvEntry> {
    let signs: Vec<f64> = outcomes.iter().map(|o| o.sign()).collect();
    let splits: Vec<(Vec<usize>, &Vec<usize>)> =
        (0..folds.len()).map(|f| (complement(folds, f), &folds[f])).collect();
    let mut table = Vec::with_capacity(grid.gammas.len() * grid.penalties.len());
    for &gamma in &grid.gammas {
        let gram = gaussian_gram(gamma, z);
        for &c in &grid.penalties {
            let mut total = 0.0;
            for (train, held) in &splits {
                let positives = train.iter().filter(|&&i| signs[i] > 0.0).count();
                let correct = if positives == 0 || positives == train.len() {
                    let constant = if positives > 0 { 1.0 } else { -1.0 };
                    held.iter().filter(|&&i| signs[i] == constant).count()
                } else {
                    let dual = solve_dual(&gram, train, &signs, c);
                    held.iter()
                        .filter(|&&i| {
                            let f = dual.decision_in_gram(&gram, train, &signs, i);
                            (f >= 0.0) == (signs[i] > 0.0)
                        })
                        .count()
                };
                total += correct as f64 / held.len() as f64;
            }
            table.push(CvEntry {
                gamma,
                penalty: c,
                score: total / splits.len() as f64,
            });
        }
    }
    table
}

fn cv_regressor(z: &[Vec<f64>], targets: &[f64], folds: &[Vec<usize>], grid: &SearchGrid) -> Vec<CvEntry> {
    let splits: Vec<(Vec<usize>, &Vec<usize>)> =
        (0..folds.len()).map(|f| (complement(folds, f), &folds[f])).collect();
    let mut table = Vec::with_capacity(grid.gammas.len() * grid.ridges.len());
    for &gamma in &grid.gammas {
        let gram = gaussian_gram(gamma, z);
        for &lambda in &grid.ridges {
            let mut total = 0.0;
            for (train, held) in &splits {
                let w = solve_ridge(&gram, train, targets, lambda);
                let sse: f64 = held
                    .iter()
                    .map(|&i| {
                        let pred: f64 = train.iter().zip(&w).map(|(&j, wj)| wj * gram[i][j]).sum();
                        (pred - targets[i]).powi(2)
                    })
                    .sum();
                total += sse / held.len() as f64;
            }
            table.push(CvEntry {
                gamma,
                penalty: lambda,
                score: -total / splits.len() as f64,
            });
        }
    }
    table
}
