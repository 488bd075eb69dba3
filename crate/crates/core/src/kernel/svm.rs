//! Soft-margin Gaussian-kernel SVM solved by SMO, with Platt-scaled
//! class probabilities.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{gaussian_gram, gaussian_kernel};
use crate::data::Outcome;
use crate::error::{Error, Result};
use crate::seed::rng_from;

const KKT_TOLERANCE: f64 = 1e-3;
const TAU: f64 = 1e-12;
const PLATT_CROSS_FIT_MIN: usize = 20;
const PLATT_FOLDS: usize = 5;
const MIN_PROBABILITY: f64 = 1e-12;

/// Sigmoid `P(valid | f) = 1 / (1 + exp(a f + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattSigmoid {
    pub a: f64,
    pub b: f64,
}

impl PlattSigmoid {
    pub fn probability(&self, decision: f64) -> f64 {
        let z = decision * self.a + self.b;
        let p = if z >= 0.0 {
            (-z).exp() / (1.0 + (-z).exp())
        } else {
            1.0 / (1.0 + z.exp())
        };
        p.clamp(MIN_PROBABILITY, 1.0 - MIN_PROBABILITY)
    }
}

/// Trained binary classifier. Valid is the positive class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmClassifier {
    support: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    coef: Vec<f64>,
    bias: f64,
    gamma: f64,
    c: f64,
    platt: PlattSigmoid,
}

impl SvmClassifier {
    /// Trains on (already standardized) inputs. Both outcomes must occur.
    pub fn train(
        inputs: &[Vec<f64>],
        outcomes: &[Outcome],
        gamma: f64,
        c: f64,
        seed: u64,
    ) -> Result<Self> {
        assert_eq!(inputs.len(), outcomes.len());
        let signs: Vec<f64> = outcomes.iter().map(|o| o.sign()).collect();
        if !(signs.contains(&1.0) && signs.contains(&-1.0)) {
            return Err(Error::SingleClass);
        }
        let gram = gaussian_gram(gamma, inputs);
        let all: Vec<usize> = (0..inputs.len()).collect();
        let dual = solve_dual(&gram, &all, &signs, c);

        let decisions: Vec<f64> = if inputs.len() < PLATT_CROSS_FIT_MIN {
            all.iter().map(|&i| dual.decision_in_gram(&gram, &all, &signs, i)).collect()
        } else {
            cross_fit_decisions(&gram, &signs, c, seed)
        };
        let platt = fit_platt(&decisions, &signs);

        let mut support = Vec::new();
        let mut coef = Vec::new();
        for (i, &a) in dual.alpha.iter().enumerate() {
            if a > 0.0 {
                support.push(inputs[i].clone());
                coef.push(a * signs[i]);
            }
        }
        Ok(Self {
            support,
            coef,
            bias: -dual.rho,
            gamma,
            c,
            platt,
        })
    }

    /// `f(x) = sum_i alpha_i y_i k(x, x_i) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * gaussian_kernel(self.gamma, x, sv))
            .sum::<f64>()
            + self.bias
    }

    pub fn probability_valid(&self, x: &[f64]) -> f64 {
        self.platt.probability(self.decision(x))
    }

    /// Label consistent with the calibrated probability.
    pub fn predict(&self, x: &[f64]) -> Outcome {
        if self.probability_valid(x) >= 0.5 {
            Outcome::Valid
        } else {
            Outcome::Invalid
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn penalty(&self) -> f64 {
        self.c
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn platt(&self) -> PlattSigmoid {
        self.platt
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn dual_coefficients(&self) -> &[f64] {
        &self.coef
    }
}

pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
}

impl DualSolution {
    /// Decision value for gram row `row` using the training subset `idx`.
    pub fn decision_in_gram(&self, gram: &[Vec<f64>], idx: &[usize], signs: &[f64], row: usize) -> f64 {
        idx.iter()
            .zip(&self.alpha)
            .filter(|(_, a)| **a > 0.0)
            .map(|(&i, a)| a * signs[i] * gram[row][i])
            .sum::<f64>()
            - self.rho
    }
}

/// SMO with second-order working-set selection on the sub-problem `idx` of a
/// precomputed Gram matrix. `signs` is indexed like the Gram matrix.
pub(crate) fn solve_dual(gram: &[Vec<f64>], idx: &[usize], signs: &[f64], c: f64) -> DualSolution {
    let n = idx.len();
    let y: Vec<f64> = idx.iter().map(|&i| signs[i]).collect();
    let k = |a: usize, b: usize| gram[idx[a]][idx[b]];
    let q = |a: usize, b: usize| y[a] * y[b] * k(a, b);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let max_iter = (100 * n).max(100_000);

    for _ in 0..max_iter {
        // Maximal violating i, then j by second-order gain.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = Some(t);
                }
            } else if !lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else { break };
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if y[t] > 0.0 {
                if !lower(alpha[t]) {
                    let gd = gmax + grad[t];
                    gmax2 = gmax2.max(grad[t]);
                    if gd > 0.0 {
                        let quad = k(i, i) + k(t, t) - 2.0 * y[i] * q(i, t);
                        let obj = -(gd * gd) / if quad > 0.0 { quad } else { TAU };
                        if obj <= best_obj {
                            best_obj = obj;
                            j_sel = Some(t);
                        }
                    }
                }
            } else if !upper(alpha[t]) {
                let gd = gmax - grad[t];
                gmax2 = gmax2.max(-grad[t]);
                if gd > 0.0 {
                    let quad = k(i, i) + k(t, t) + 2.0 * y[i] * q(i, t);
                    let obj = -(gd * gd) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let Some(j) = j_sel else { break };
        if gmax + gmax2 < KKT_TOLERANCE {
            break;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = k(i, i) + k(j, j) + 2.0 * q(i, j);
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = k(i, i) + k(j, j) - 2.0 * q(i, j);
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // Offset from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (ub + lb)
    };
    DualSolution { alpha, rho }
}

/// Out-of-fold decision values for the Platt fit.
fn cross_fit_decisions(gram: &[Vec<f64>], signs: &[f64], c: f64, seed: u64) -> Vec<f64> {
    let n = signs.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from(seed));
    let mut decisions = vec![0.0; n];
    for fold in 0..PLATT_FOLDS {
        let (start, end) = (fold * n / PLATT_FOLDS, (fold + 1) * n / PLATT_FOLDS);
        let held = &perm[start..end];
        let train: Vec<usize> = perm[..start].iter().chain(&perm[end..]).copied().collect();
        let positives = train.iter().filter(|&&i| signs[i] > 0.0).count();
        if positives == 0 || positives == train.len() {
            let constant = if positives > 0 { 1.0 } else { -1.0 };
            held.iter().for_each(|&i| decisions[i] = constant);
            continue;
        }
        let dual = solve_dual(gram, &train, signs, c);
        for &i in held {
            decisions[i] = dual.decision_in_gram(gram, &train, signs, i);
        }
    }
    decisions
}

/// Platt sigmoid fit by Newton's method with backtracking, using the
/// prior-corrected targets `(N+ + 1)/(N+ + 2)` and `1/(N- + 2)`.
pub fn fit_platt(decisions: &[f64], signs: &[f64]) -> PlattSigmoid {
    let prior1 = signs.iter().filter(|&&s| s > 0.0).count() as f64;
    let prior0 = signs.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let targets: Vec<f64> = signs.iter().map(|&s| if s > 0.0 { hi } else { lo }).collect();

    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(f, t)| {
                let z = f * a + b;
                if z >= 0.0 {
                    t * z + (-z).exp().ln_1p()
                } else {
                    (t - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };

    let (max_iter, min_step, sigma, eps) = (100, 1e-10, 1e-12, 1e-5);
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..max_iter {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (f, t) in decisions.iter().zip(&targets) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    PlattSigmoid { a, b }
}
