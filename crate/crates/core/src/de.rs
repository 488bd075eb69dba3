//! Differential evolution (DE/rand/1/bin) maximizer over a box.

use rand::Rng;

use crate::sampling::uniform_point;
use crate::seed::rng_from;
use crate::space::ParameterSpace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig {
    pub population: usize,
    pub mutation: f64,
    pub crossover: f64,
    pub generations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl DeConfig {
    /// Standard settings sized for a `dim`-dimensional search.
    pub fn for_dim(dim: usize, seed: u64) -> Self {
        Self {
            population: (15 * dim).max(4),
            mutation: 0.8,
            crossover: 0.9,
            generations: 100,
            tolerance: 1e-8,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Maximizes `f` over `space`. Trial vectors are clipped to the bounds and
/// the first member reaching the best value is kept.
pub fn de_maximize<F>(mut f: F, space: &ParameterSpace, cfg: &DeConfig) -> DeResult
where
    F: FnMut(&[f64]) -> f64,
{
    let np = cfg.population.max(4);
    let dim = space.dim();
    let mut rng = rng_from(cfg.seed);
    let mut pop: Vec<Vec<f64>> = (0..np).map(|_| uniform_point(&mut rng, space)).collect();
    let mut fit: Vec<f64> = pop.iter().map(|x| sanitize(f(x))).collect();
    let mut evaluations = np;

    let mut best = 0;
    for i in 1..np {
        if fit[i] > fit[best] {
            best = i;
        }
    }
    let mut best_x = pop[best].clone();
    let mut best_f = fit[best];

    for _ in 0..cfg.generations {
        let (lo, hi) = fit
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi - lo < cfg.tolerance {
            break;
        }
        for i in 0..np {
            let (a, b, c) = distinct_three(&mut rng, np, i);
            let forced = rng.random_range(0..dim);
            let mut trial = pop[i].clone();
            for j in 0..dim {
                if j == forced || rng.random::<f64>() < cfg.crossover {
                    trial[j] = pop[a][j] + cfg.mutation * (pop[b][j] - pop[c][j]);
                }
            }
            space.clip(&mut trial);
            let value = sanitize(f(&trial));
            evaluations += 1;
            if value >= fit[i] {
                if value > best_f {
                    best_f = value;
                    best_x.clone_from(&trial);
                }
                pop[i] = trial;
                fit[i] = value;
            }
        }
    }
    DeResult {
        x: best_x,
        value: best_f,
        evaluations,
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn distinct_three<R: Rng>(rng: &mut R, n: usize, exclude: usize) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let k = rng.random_range(0..n);
        if !taken.contains(&k) {
            return k;
        }
    };
    let a = pick(&[exclude]);
    let b = pick(&[exclude, a]);
    let c = pick(&[exclude, a, b]);
    (a, b, c)
}
