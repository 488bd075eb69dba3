//! Gaussian process regression with a Matérn (nu = 3/2) kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use super::{squared_distance, Standardizer};
use crate::error::{Error, Result};
use crate::seed::rng_from;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];
const RESTARTS: usize = 4;
/// Bounds of ln(length scale) and ln(signal variance).
const LOG_BOUNDS: (f64, f64) = (-6.907_755_278_982_137, 6.907_755_278_982_137);

fn matern32(r: f64, length: f64, variance: f64) -> f64 {
    let s = SQRT3 * r / length;
    variance * (1.0 + s) * (-s).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GprPrediction {
    pub mean: f64,
    pub stddev: f64,
}

/// A trained GP. Inputs and targets are standardized internally; predictions
/// are reported in the original target units.
#[derive(Debug, Clone)]
pub struct GprModel {
    standardizer: Standardizer,
    inputs: Vec<Vec<f64>>,
    y_mean: f64,
    y_scale: f64,
    length_scale: f64,
    signal_variance: f64,
    noise: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y: DVector<f64>,
    log_likelihood: f64,
}

struct Problem {
    distances: Vec<Vec<f64>>,
    y: DVector<f64>,
}

struct Factorization {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    noise: f64,
    log_likelihood: f64,
}

impl Problem {
    fn factorize(&self, length: f64, variance: f64) -> Option<Factorization> {
        let n = self.y.len();
        for &noise in &JITTER_LADDER {
            let k = DMatrix::from_fn(n, n, |i, j| {
                matern32(self.distances[i][j], length, variance) + if i == j { noise } else { 0.0 }
            });
            if let Some(chol) = k.cholesky() {
                let alpha = chol.solve(&self.y);
                let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
                let ll = -0.5 * self.y.dot(&alpha)
                    - log_det_half
                    - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
                if ll.is_finite() {
                    return Some(Factorization {
                        chol,
                        alpha,
                        noise,
                        log_likelihood: ll,
                    });
                }
            }
        }
        None
    }

    fn neg_log_likelihood(&self, theta: &[f64; 2]) -> f64 {
        match self.factorize(theta[0].exp(), theta[1].exp()) {
            Some(f) => -f.log_likelihood,
            None => f64::INFINITY,
        }
    }
}

/// Fits a GP, choosing length scale and signal variance by maximizing the
/// log marginal likelihood from several starting points.
pub fn train_gpr<X: AsRef<[f64]>>(inputs: &[X], targets: &[f64], seed: u64) -> Result<GprModel> {
    assert_eq!(inputs.len(), targets.len());
    assert!(inputs.len() >= 2, "GP regression needs at least two points");
    let standardizer = Standardizer::fit(inputs);
    let z = standardizer.transform_all(inputs);
    let n = z.len() as f64;
    let y_mean = targets.iter().sum::<f64>() / n;
    let sd = (targets.iter().map(|t| (t - y_mean).powi(2)).sum::<f64>() / n).sqrt();
    let y_scale = if sd > 0.0 { sd } else { 1.0 };
    let y = DVector::from_iterator(z.len(), targets.iter().map(|t| (t - y_mean) / y_scale));
    let problem = Problem {
        distances: pairwise_distances(&z),
        y,
    };

    let mut rng = rng_from(seed);
    let mut starts = vec![[0.0, 0.0]];
    for _ in 1..RESTARTS {
        starts.push([
            rng.random_range(LOG_BOUNDS.0..LOG_BOUNDS.1),
            rng.random_range(LOG_BOUNDS.0..LOG_BOUNDS.1),
        ]);
    }
    let mut best: Option<([f64; 2], f64)> = None;
    for start in starts {
        let (theta, value) = nelder_mead(|t| problem.neg_log_likelihood(t), start);
        if value.is_finite() && best.is_none_or(|(_, v)| value < v) {
            best = Some((theta, value));
        }
    }
    let (theta, _) = best.ok_or(Error::NotPositiveDefinite)?;
    let (length_scale, signal_variance) = (theta[0].exp(), theta[1].exp());
    let f = problem
        .factorize(length_scale, signal_variance)
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(GprModel {
        standardizer,
        inputs: z,
        y_mean,
        y_scale,
        length_scale,
        signal_variance,
        noise: f.noise,
        chol: f.chol,
        alpha: f.alpha,
        y: problem.y,
        log_likelihood: f.log_likelihood,
    })
}

impl GprModel {
    pub fn predict(&self, x: &[f64]) -> GprPrediction {
        let z = self.standardizer.transform(x);
        let kstar = DVector::from_iterator(
            self.inputs.len(),
            self.inputs
                .iter()
                .map(|xi| matern32(squared_distance(&z, xi).sqrt(), self.length_scale, self.signal_variance)),
        );
        let mean = kstar.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .unwrap_or_else(|| DVector::zeros(kstar.len()));
        let var = (self.signal_variance - v.dot(&v)).max(0.0);
        GprPrediction {
            mean: self.y_mean + self.y_scale * mean,
            stddev: self.y_scale * var.sqrt(),
        }
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Log marginal likelihood (standardized targets) at the fitted optimum.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Log marginal likelihood of the same training data under other
    /// hyperparameters; `None` if the kernel matrix cannot be factorized.
    pub fn log_marginal_likelihood_at(&self, length_scale: f64, signal_variance: f64) -> Option<f64> {
        let problem = Problem {
            distances: pairwise_distances(&self.inputs),
            y: self.y.clone(),
        };
        problem
            .factorize(length_scale, signal_variance)
            .map(|f| f.log_likelihood)
    }
}

fn pairwise_distances(z: &[Vec<f64>]) -> Vec<Vec<f64>> {
    z.iter()
        .map(|a| z.iter().map(|b| squared_distance(a, b).sqrt()).collect())
        .collect()
}

/// Bound-clipped Nelder-Mead minimization in two dimensions.
fn nelder_mead<F: Fn(&[f64; 2]) -> f64>(f: F, start: [f64; 2]) -> ([f64; 2], f64) {
    let clip = |p: [f64; 2]| p.map(|v| v.clamp(LOG_BOUNDS.0, LOG_BOUNDS.1));
    let eval = |p: &[f64; 2]| {
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let start = clip(start);
    let mut simplex: Vec<([f64; 2], f64)> = [start, [start[0] + 0.5, start[1]], [start[0], start[1] + 0.5]]
        .into_iter()
        .map(clip)
        .map(|p| (p, eval(&p)))
        .collect();

    for _ in 0..200 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[2].1);
        let size = simplex
            .iter()
            .skip(1)
            .map(|(p, _)| (p[0] - simplex[0].0[0]).abs().max((p[1] - simplex[0].0[1]).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= 1e-8 * (1.0 + best.abs()) && size < 1e-5 {
            break;
        }
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let along = |t: f64| {
            clip([
                centroid[0] + t * (simplex[2].0[0] - centroid[0]),
                centroid[1] + t * (simplex[2].0[1] - centroid[1]),
            ])
        };
        let reflected = along(-1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = eval(&expanded);
            simplex[2] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < simplex[2].1 {
                let c = along(-0.5);
                (c, eval(&c))
            } else {
                let c = along(0.5);
                (c, eval(&c))
            };
            if fc < simplex[2].1.min(fr) {
                simplex[2] = (contracted, fc);
            } else {
                let b = simplex[0].0;
                for k in 1..3 {
                    let p = clip([
                        b[0] + 0.5 * (simplex[k].0[0] - b[0]),
                        b[1] + 0.5 * (simplex[k].0[1] - b[1]),
                    ]);
                    simplex[k] = (p, eval(&p));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}
