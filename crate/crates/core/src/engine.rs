//! The adaptive exploration loop and the baseline samplers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{DataPoint, DataSet, Outcome};
use crate::de::{de_maximize, DeConfig};
use crate::error::{Error, Result};
use crate::kernel::{squared_distance, train_estimator_pair, train_gpr, Hyperparameters};
use crate::sampling::{grid, latin_hypercube};
use crate::seed::{SeedSequence, Stream};
use crate::sim::Simulation;
use crate::space::ParameterSpace;
use crate::utility::{UtilityContext, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ours,
    KrigingBinary,
    KrigingContinuous,
    Grid,
    Lhs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Ours,
        Algorithm::KrigingBinary,
        Algorithm::KrigingContinuous,
        Algorithm::Grid,
        Algorithm::Lhs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ours => "ours",
            Algorithm::KrigingBinary => "kriging-binary",
            Algorithm::KrigingContinuous => "kriging-continuous",
            Algorithm::Grid => "grid",
            Algorithm::Lhs => "lhs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm '{s}'")))
    }
}

/// Target construction of the Kriging baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KrigingMode {
    /// `-1` for valid points, `+1` otherwise.
    Binary,
    /// Signed distance to the nearest point of the opposite outcome.
    ContinuousDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSetup {
    /// Total number of samples `N`.
    pub samples: usize,
    /// Grid points per axis `G` of the start-up grid.
    pub grid_edges: usize,
    pub grid_space: ParameterSpace,
    pub weights: WeightVector,
    pub seed: u64,
}

impl ExplorationSetup {
    pub fn new(samples: usize, grid_edges: usize, grid_space: ParameterSpace, weights: WeightVector, seed: u64) -> Self {
        Self {
            samples,
            grid_edges,
            grid_space,
            weights,
            seed,
        }
    }

    pub fn grid_size(&self) -> usize {
        grid_count(self.grid_edges, self.grid_space.dim())
    }

    pub fn validate(&self, space: &ParameterSpace) -> Result<()> {
        if self.grid_space.dim() != space.dim() {
            return Err(Error::Dimension {
                expected: space.dim(),
                got: self.grid_space.dim(),
            });
        }
        if !space.encloses(&self.grid_space) {
            return Err(Error::InvalidSetup("grid space must lie inside the exploration space".into()));
        }
        if self.grid_size() > self.samples {
            return Err(Error::InvalidSetup(format!(
                "grid of {} points exceeds the sample budget {}",
                self.grid_size(),
                self.samples
            )));
        }
        self.weights.validate()
    }
}

fn grid_count(g: usize, dim: usize) -> usize {
    u32::try_from(dim).ok().and_then(|d| g.checked_pow(d)).unwrap_or(usize::MAX)
}

/// Largest `G` with `G^p <= n`.
pub fn largest_grid_edges(n: usize, dim: usize) -> usize {
    let mut g = 0;
    while grid_count(g + 1, dim) <= n {
        g += 1;
    }
    g
}

/// Hyperparameters in effect when a point was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperSnapshot {
    Estimator {
        #[serde(flatten)]
        hyper: Hyperparameters,
        fallback: bool,
    },
    Gpr {
        length_scale: f64,
        signal_variance: f64,
    },
}

/// One acquisition step. `n` is the zero-based position of the new point in
/// the data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    pub x: Vec<f64>,
    pub utility: f64,
    pub hyperparams: HyperSnapshot,
    pub outcome: Outcome,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationRun {
    pub algorithm: Algorithm,
    pub setup: ExplorationSetup,
    pub dataset: DataSet,
    pub trace: Vec<TraceRecord>,
}

impl ExplorationRun {
    pub fn write_trace<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for r in &self.trace {
            let line = serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// A run that stopped early. The points evaluated so far are kept.
#[derive(Debug)]
pub struct RunAborted {
    pub error: Error,
    pub partial: ExplorationRun,
}

impl fmt::Display for RunAborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} run aborted after {} points: {}",
            self.partial.algorithm,
            self.partial.dataset.len(),
            self.error
        )
    }
}

impl std::error::Error for RunAborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub type RunResult = std::result::Result<ExplorationRun, RunAborted>;

struct Recorder<'a, S: ?Sized> {
    sim: &'a S,
    run: ExplorationRun,
}

impl<'a, S: Simulation + ?Sized> Recorder<'a, S> {
    fn new(sim: &'a S, algorithm: Algorithm, setup: &ExplorationSetup, initial: DataSet) -> Self {
        Self {
            sim,
            run: ExplorationRun {
                algorithm,
                setup: setup.clone(),
                dataset: initial,
                trace: Vec::new(),
            },
        }
    }

    fn abort(self, error: Error) -> RunAborted {
        RunAborted {
            error,
            partial: self.run,
        }
    }

    fn evaluate(&mut self, x: Vec<f64>) -> Result<DataPoint> {
        let p = self.sim.data_point(x)?;
        self.run.dataset.push(p.clone());
        Ok(p)
    }

    fn evaluate_all(mut self, xs: Vec<Vec<f64>>) -> std::result::Result<Self, RunAborted> {
        for x in xs {
            if let Err(e) = self.evaluate(x) {
                return Err(self.abort(e));
            }
        }
        Ok(self)
    }

    fn acquire(&mut self, x: Vec<f64>, utility: f64, hyperparams: HyperSnapshot) -> Result<()> {
        let n = self.run.dataset.len();
        let p = self.evaluate(x)?;
        self.run.trace.push(TraceRecord {
            n,
            x: p.x,
            utility,
            hyperparams,
            outcome: p.outcome,
            target: p.target,
        });
        Ok(())
    }
}

/// Proposed next evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub x: Vec<f64>,
    pub utility: f64,
    pub hyperparams: HyperSnapshot,
}

/// Trains the estimator pair on `data` and maximizes the utility over `space`.
pub fn suggest(data: &DataSet, space: &ParameterSpace, weights: &WeightVector, seed: u64) -> Result<Suggestion> {
    suggest_at(data, space, weights, SeedSequence::new(seed), 0)
}

fn suggest_at(
    data: &DataSet,
    space: &ParameterSpace,
    weights: &WeightVector,
    seeds: SeedSequence,
    index: u64,
) -> Result<Suggestion> {
    if weights.is_degenerate() {
        return Err(Error::DegenerateWeights);
    }
    if data.is_empty() {
        return Err(Error::InvalidSetup("suggestion needs at least one evaluated point".into()));
    }
    let estimator = train_estimator_pair(data, seeds.derive(Stream::CrossValidation, index))?;
    let ctx = UtilityContext::new(&estimator, data, *weights)?;
    let best = de_maximize(
        |x| ctx.evaluate(x),
        space,
        &DeConfig::for_dim(space.dim(), seeds.derive(Stream::Evolution, index)),
    );
    Ok(Suggestion {
        x: best.x,
        utility: best.value,
        hyperparams: HyperSnapshot::Estimator {
            hyper: estimator.hyperparameters(),
            fallback: estimator.is_fallback(),
        },
    })
}

/// The adaptive loop: an optional start-up grid on `grid_space`, then one
/// utility-maximizing suggestion per iteration until `N` is reached. With a
/// nonempty `initial` set the grid is skipped and `N` further points are added.
pub fn explore<S: Simulation + ?Sized>(
    initial: &DataSet,
    space: &ParameterSpace,
    setup: &ExplorationSetup,
    sim: &S,
) -> RunResult {
    let recorder = Recorder::new(sim, Algorithm::Ours, setup, initial.clone());
    if let Err(e) = check_setup(initial, space, setup) {
        return Err(recorder.abort(e));
    }
    let mut n = 0;
    let mut recorder = if initial.is_empty() {
        let nodes = grid(setup.grid_edges, &setup.grid_space);
        n = nodes.len();
        recorder.evaluate_all(nodes)?
    } else {
        recorder
    };
    let seeds = SeedSequence::new(setup.seed);
    while n < setup.samples {
        let index = recorder.run.dataset.len() as u64;
        let step = suggest_at(&recorder.run.dataset, space, &setup.weights, seeds, index)
            .and_then(|s| recorder.acquire(s.x, s.utility, s.hyperparams));
        if let Err(e) = step {
            return Err(recorder.abort(e));
        }
        n += 1;
    }
    Ok(recorder.run)
}

fn check_setup(initial: &DataSet, space: &ParameterSpace, setup: &ExplorationSetup) -> Result<()> {
    if initial.is_empty() {
        setup.validate(space)
    } else {
        if let Some(d) = initial.dim() {
            if d != space.dim() {
                return Err(Error::Dimension {
                    expected: space.dim(),
                    got: d,
                });
            }
        }
        setup.weights.validate()
    }
}

/// Expected improvement in the form used for the feasibility border:
/// `s / sqrt(2 pi) * exp(-mean^2 / (2 s^2))`.
pub fn expected_improvement(mean: f64, stddev: f64) -> f64 {
    if !(stddev > 0.0) {
        return 0.0;
    }
    stddev / (2.0 * std::f64::consts::PI).sqrt() * (-(mean * mean) / (2.0 * stddev * stddev)).exp()
}

/// Distance from `x` to the closest point in `data` whose outcome differs
/// from `outcome`, in raw coordinates.
pub fn feasibility_border_distance(x: &[f64], data: &DataSet, outcome: Outcome) -> Result<f64> {
    data.iter()
        .filter(|p| p.outcome != outcome)
        .map(|p| squared_distance(x, &p.x))
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))))
        .map(f64::sqrt)
        .ok_or(Error::NoOpposingClass)
}

/// Regression targets of the Kriging baseline for every point of `data`.
pub fn kriging_targets(data: &DataSet, mode: KrigingMode) -> Vec<f64> {
    match mode {
        KrigingMode::Binary => data.iter().map(|p| -p.outcome.sign()).collect(),
        KrigingMode::ContinuousDistance => {
            let single_class = !data.has_both_classes();
            data.iter()
                .enumerate()
                .map(|(i, p)| {
                    let d = if single_class {
                        nearest_other(data, i)
                    } else {
                        feasibility_border_distance(&p.x, data, p.outcome).expect("both classes present")
                    };
                    -p.outcome.sign() * d
                })
                .collect()
        }
    }
}

fn nearest_other(data: &DataSet, i: usize) -> f64 {
    let x = &data.points()[i].x;
    data.iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, p)| squared_distance(x, &p.x))
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))))
        .map_or(0.0, f64::sqrt)
}

/// Grid start-up followed by GPR expected-improvement acquisitions. The
/// optimization target is ignored.
pub fn kriging_explore<S: Simulation + ?Sized>(
    space: &ParameterSpace,
    setup: &ExplorationSetup,
    sim: &S,
    mode: KrigingMode,
) -> RunResult {
    let algorithm = match mode {
        KrigingMode::Binary => Algorithm::KrigingBinary,
        KrigingMode::ContinuousDistance => Algorithm::KrigingContinuous,
    };
    let recorder = Recorder::new(sim, algorithm, setup, DataSet::new());
    if let Err(e) = setup.validate(space) {
        return Err(recorder.abort(e));
    }
    let mut recorder = recorder.evaluate_all(grid(setup.grid_edges, &setup.grid_space))?;
    let seeds = SeedSequence::new(setup.seed);
    while recorder.run.dataset.len() < setup.samples {
        let index = recorder.run.dataset.len() as u64;
        let data = &recorder.run.dataset;
        let step = if data.is_empty() {
            Err(Error::InvalidSetup("Kriging needs a start-up grid".into()))
        } else {
            train_gpr(&data.params(), &kriging_targets(data, mode), seeds.derive(Stream::GprRestarts, index)).map(|gpr| {
                let best = de_maximize(
                    |x| {
                        let p = gpr.predict(x);
                        expected_improvement(p.mean, p.stddev)
                    },
                    space,
                    &DeConfig::for_dim(space.dim(), seeds.derive(Stream::Evolution, index)),
                );
                let snapshot = HyperSnapshot::Gpr {
                    length_scale: gpr.length_scale(),
                    signal_variance: gpr.signal_variance(),
                };
                (best, snapshot)
            })
        };
        let step = step.and_then(|(best, snapshot)| recorder.acquire(best.x, best.value, snapshot));
        if let Err(e) = step {
            return Err(recorder.abort(e));
        }
    }
    Ok(recorder.run)
}

/// Regular grid with the largest `G` such that `G^p <= N`, on `grid_space`.
pub fn grid_explore<S: Simulation + ?Sized>(setup: &ExplorationSetup, sim: &S) -> RunResult {
    let g = largest_grid_edges(setup.samples, setup.grid_space.dim());
    let recorder = Recorder::new(sim, Algorithm::Grid, setup, DataSet::new());
    recorder.evaluate_all(grid(g, &setup.grid_space)).map(|r| r.run)
}

/// `N` Latin hypercube samples over the full space.
pub fn lhs_explore<S: Simulation + ?Sized>(space: &ParameterSpace, setup: &ExplorationSetup, sim: &S) -> RunResult {
    let seed = SeedSequence::new(setup.seed).derive(Stream::Sampling, 0);
    let recorder = Recorder::new(sim, Algorithm::Lhs, setup, DataSet::new());
    if setup.samples == 0 {
        return Ok(recorder.run);
    }
    recorder.evaluate_all(latin_hypercube(setup.samples, space, seed)).map(|r| r.run)
}

/// Dispatches to the matching exploration routine.
pub fn run_algorithm<S: Simulation + ?Sized>(
    algorithm: Algorithm,
    space: &ParameterSpace,
    setup: &ExplorationSetup,
    sim: &S,
) -> RunResult {
    match algorithm {
        Algorithm::Ours => explore(&DataSet::new(), space, setup, sim),
        Algorithm::KrigingBinary => kriging_explore(space, setup, sim, KrigingMode::Binary),
        Algorithm::KrigingContinuous => kriging_explore(space, setup, sim, KrigingMode::ContinuousDistance),
        Algorithm::Grid => grid_explore(setup, sim),
        Algorithm::Lhs => lhs_explore(space, setup, sim),
    }
}
