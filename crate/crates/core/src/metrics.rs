//! Monte-Carlo quality metrics of an exploration.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{DataSet, Outcome};
use crate::engine::{Algorithm, ExplorationRun};
use crate::error::{Error, Result};
use crate::kernel::{train_estimator_pair, EstimatorPair, Hyperparameters};
use crate::sampling::uniform_point;
use crate::seed::{SeedSequence, Stream};
use crate::sim::Simulation;

pub const DEFAULT_MC_SAMPLES: usize = 10_000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Anything that predicts an outcome for a parameter vector.
pub trait OutcomePredictor {
    fn predict_outcome(&self, x: &[f64]) -> Outcome;
}

impl OutcomePredictor for EstimatorPair {
    fn predict_outcome(&self, x: &[f64]) -> Outcome {
        EstimatorPair::predict_outcome(self, x)
    }
}

/// Always predicts the same outcome.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPredictor(pub Outcome);

impl OutcomePredictor for ConstantPredictor {
    fn predict_outcome(&self, _: &[f64]) -> Outcome {
        self.0
    }
}

/// Predicts by asking the simulation itself.
pub struct Oracle<'a, S: ?Sized>(pub &'a S);

impl<S: Simulation + ?Sized> OutcomePredictor for Oracle<'_, S> {
    fn predict_outcome(&self, x: &[f64]) -> Outcome {
        self.0.evaluate(x).map_or(Outcome::Invalid, |e| e.outcome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub samples: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl McSettings {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            confidence: DEFAULT_CONFIDENCE,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidSetup("Monte-Carlo estimates need at least 2 samples".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidSetup(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// Monte-Carlo mean with a symmetric confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub half_width: f64,
    pub samples: usize,
    pub confidence: f64,
}

impl McEstimate {
    pub fn covers(&self, x: f64) -> bool {
        (self.value - x).abs() <= self.half_width
    }
}

/// `|z_{(1-P)/2}|` of the standard normal.
pub fn normal_quantile(confidence: f64) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(0.5 * (1.0 - confidence)).abs()
}

/// Half-width `|z| / sqrt(N (N - 1)) * sqrt(sum (f - mean)^2)`.
fn half_width(values: impl Iterator<Item = f64> + Clone, mean: f64, n: usize, z: f64) -> f64 {
    let ss: f64 = values.map(|f| (f - mean).powi(2)).sum();
    z * (ss / (n as f64 * (n as f64 - 1.0))).sqrt()
}

fn indicator_estimate(flags: &[bool], confidence: f64) -> McEstimate {
    let n = flags.len();
    let mean = flags.iter().filter(|&&b| b).count() as f64 / n as f64;
    let values = flags.iter().map(|&b| if b { 1.0 } else { 0.0 });
    McEstimate {
        value: mean,
        half_width: half_width(values, mean, n, normal_quantile(confidence)),
        samples: n,
        confidence,
    }
}

/// Fraction of correct predictions on `data`.
pub fn score<P: OutcomePredictor + ?Sized>(predictor: &P, data: &DataSet) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let hits = data.iter().filter(|p| predictor.predict_outcome(&p.x) == p.outcome).count();
    hits as f64 / data.len() as f64
}

/// Success rate and error ratios, all from one shared uniform sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCharacteristics {
    pub success_rate: McEstimate,
    pub false_positive: McEstimate,
    pub false_negative: McEstimate,
}

pub fn mc_characteristics<P, S>(predictor: &P, sim: &S, settings: &McSettings) -> Result<McCharacteristics>
where
    P: OutcomePredictor + ?Sized,
    S: Simulation + ?Sized,
{
    settings.validate()?;
    let mut rng = SeedSequence::new(settings.seed).rng(Stream::MonteCarlo, 0);
    let n = settings.samples;
    let mut correct = Vec::with_capacity(n);
    let mut fp = Vec::with_capacity(n);
    let mut fneg = Vec::with_capacity(n);
    for _ in 0..n {
        let x = uniform_point(&mut rng, sim.space());
        let truth = sim.evaluate(&x)?.outcome;
        let guess = predictor.predict_outcome(&x);
        correct.push(truth == guess);
        fp.push(guess.is_valid() && !truth.is_valid());
        fneg.push(!guess.is_valid() && truth.is_valid());
    }
    let success_rate = indicator_estimate(&correct, settings.confidence);
    let false_positive = indicator_estimate(&fp, settings.confidence);
    let mut false_negative = indicator_estimate(&fneg, settings.confidence);
    // Same counts, but written so the three values sum to one exactly.
    false_negative.value = 1.0 - (success_rate.value + false_positive.value);
    Ok(McCharacteristics {
        success_rate,
        false_positive,
        false_negative,
    })
}

/// Valid-to-invalid count ratio of a data set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValidityRatio {
    Finite(f64),
    /// No invalid point: the ratio is unbounded.
    Undefined { valid: usize, invalid: usize },
}

impl ValidityRatio {
    pub fn value(&self) -> Option<f64> {
        match self {
            ValidityRatio::Finite(v) => Some(*v),
            ValidityRatio::Undefined { .. } => None,
        }
    }
}

pub fn validity_ratio(data: &DataSet) -> ValidityRatio {
    let valid = data.count_valid();
    let invalid = data.count_invalid();
    if invalid == 0 {
        ValidityRatio::Undefined { valid, invalid }
    } else {
        ValidityRatio::Finite(valid as f64 / invalid as f64)
    }
}

/// Infinite-sampling validity ratio and the coin-toss error ratios it
/// implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEstimates {
    pub alpha: McEstimate,
    pub r_fp: McEstimate,
    pub r_fn: McEstimate,
}

pub fn mc_reference_limits<S: Simulation + ?Sized>(sim: &S, settings: &McSettings) -> Result<ReferenceEstimates> {
    settings.validate()?;
    let mut rng = SeedSequence::new(settings.seed).rng(Stream::MonteCarlo, 0);
    let valid: Vec<bool> = (0..settings.samples)
        .map(|_| sim.evaluate(&uniform_point(&mut rng, sim.space())).map(|e| e.outcome.is_valid()))
        .collect::<Result<_>>()?;
    let fraction = indicator_estimate(&valid, settings.confidence);
    let total = sim.space().volume();
    let alpha_v = total * fraction.value;
    let delta_alpha_v = total * fraction.half_width;
    if alpha_v <= 0.0 {
        return Err(Error::DegenerateVolume("no valid sample"));
    }
    if alpha_v >= total {
        return Err(Error::DegenerateVolume("no invalid sample"));
    }
    let alpha = alpha_v / (total - alpha_v);
    let delta_alpha = total * delta_alpha_v / (total - alpha_v).powi(2);
    let delta_r = delta_alpha / (2.0 * (alpha + 1.0).powi(2));
    let r_fp = alpha / (2.0 * (alpha + 1.0));
    let est = |value, half_width| McEstimate {
        value,
        half_width,
        samples: settings.samples,
        confidence: settings.confidence,
    };
    Ok(ReferenceEstimates {
        alpha: est(alpha, delta_alpha),
        r_fp: est(r_fp, delta_r),
        r_fn: est(0.5 - r_fp, delta_r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `g > 1`: the data set is easier than the space as a whole.
    Oversimplified,
    Representative,
    /// `g < 1`: the data set concentrates on hard regions.
    Overcomplicated,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generalization {
    pub g: Option<f64>,
    pub regime: Regime,
}

/// `g = sigma / R`.
pub fn generalization_ratio(sigma: f64, success_rate: f64) -> Generalization {
    if !(success_rate > 0.0) || !sigma.is_finite() {
        return Generalization {
            g: None,
            regime: Regime::Undefined,
        };
    }
    let g = sigma / success_rate;
    let regime = if g > 1.0 {
        Regime::Oversimplified
    } else if g < 1.0 {
        Regime::Overcomplicated
    } else {
        Regime::Representative
    };
    Generalization { g: Some(g), regime }
}

/// Everything reported for a finished exploration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationCharacteristics {
    pub algorithm: Option<Algorithm>,
    pub n: usize,
    pub valid: usize,
    pub invalid: usize,
    #[serde(rename = "R")]
    pub success_rate: McEstimate,
    pub sigma: f64,
    pub g: Generalization,
    pub r_fp: McEstimate,
    pub r_fn: McEstimate,
    pub alpha: ValidityRatio,
    pub t_best: Option<f64>,
    pub t_worst: Option<f64>,
    pub fallback_classifier: bool,
    pub hyperparameters: Hyperparameters,
}

/// Retrains the estimator pair on `data` and scores it.
pub fn assess<S: Simulation + ?Sized>(
    data: &DataSet,
    sim: &S,
    settings: &McSettings,
) -> Result<(ExplorationCharacteristics, EstimatorPair)> {
    let estimator = train_estimator_pair(data, SeedSequence::new(settings.seed).derive(Stream::FinalEstimator, 0))?;
    let mc = mc_characteristics(&estimator, sim, settings)?;
    let sigma = score(&estimator, data);
    let extremes = data.extremal_targets().ok();
    let report = ExplorationCharacteristics {
        algorithm: None,
        n: data.len(),
        valid: data.count_valid(),
        invalid: data.count_invalid(),
        success_rate: mc.success_rate,
        sigma,
        g: generalization_ratio(sigma, mc.success_rate.value),
        r_fp: mc.false_positive,
        r_fn: mc.false_negative,
        alpha: validity_ratio(data),
        t_best: extremes.map(|e| e.1),
        t_worst: extremes.map(|e| e.0),
        fallback_classifier: estimator.is_fallback(),
        hyperparameters: estimator.hyperparameters(),
    };
    Ok((report, estimator))
}

pub fn characteristics_report<S: Simulation + ?Sized>(
    run: &ExplorationRun,
    sim: &S,
    settings: &McSettings,
) -> Result<ExplorationCharacteristics> {
    let (mut report, _) = assess(&run.dataset, sim, settings)?;
    report.algorithm = Some(run.algorithm);
    Ok(report)
}

/// One line of a progression table. Reference rows leave the run-only
/// columns empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionRow {
    pub setup: String,
    pub algorithm: String,
    pub n: Option<usize>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[serde(rename = "dR")]
    pub dr: Option<f64>,
    pub r_fp: f64,
    pub dr_fp: f64,
    pub r_fn: f64,
    pub dr_fn: f64,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub dalpha: Option<f64>,
    pub t_best: Option<f64>,
    pub t_worst: Option<f64>,
}

impl ProgressionRow {
    pub fn from_report(setup: &str, report: &ExplorationCharacteristics) -> Self {
        Self {
            setup: setup.to_string(),
            algorithm: report.algorithm.map_or_else(String::new, |a| a.to_string()),
            n: Some(report.n),
            r: Some(report.success_rate.value),
            dr: Some(report.success_rate.half_width),
            r_fp: report.r_fp.value,
            dr_fp: report.r_fp.half_width,
            r_fn: report.r_fn.value,
            dr_fn: report.r_fn.half_width,
            sigma: Some(report.sigma),
            alpha: report.alpha.value(),
            dalpha: None,
            t_best: report.t_best,
            t_worst: report.t_worst,
        }
    }

    pub fn reference(limits: &ReferenceEstimates) -> Self {
        Self {
            setup: "reference".into(),
            algorithm: String::new(),
            n: None,
            r: None,
            dr: None,
            r_fp: limits.r_fp.value,
            dr_fp: limits.r_fp.half_width,
            r_fn: limits.r_fn.value,
            dr_fn: limits.r_fn.half_width,
            sigma: None,
            alpha: Some(limits.alpha.value),
            dalpha: Some(limits.alpha.half_width),
            t_best: None,
            t_worst: None,
        }
    }
}

pub fn write_progression<W: std::io::Write>(rows: &[ProgressionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataPoint;
    use crate::sim::{toy_reference_limits, FnSimulation, ToySimulation};
    use crate::space::ParameterSpace;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn quantile_matches_table_value() {
        assert!((normal_quantile(0.95) - 1.959964).abs() < 1e-6);
    }

    #[test]
    fn oracle_predictor_is_perfect() {
        let sim = ToySimulation::new();
        let mc = mc_characteristics(&Oracle(&sim), &sim, &McSettings::new(2000, 1)).unwrap();
        assert_eq!(mc.success_rate.value, 1.0);
        assert_eq!(mc.success_rate.half_width, 0.0);
        assert_eq!(mc.false_positive.value, 0.0);
        assert_eq!(mc.false_negative.value, 0.0);
    }

    #[test]
    fn constant_invalid_predictor_on_toy() {
        let sim = ToySimulation::new();
        let mc = mc_characteristics(&ConstantPredictor(Outcome::Invalid), &sim, &McSettings::new(10_000, 7)).unwrap();
        let valid_fraction = 3.0 * PI / 32.0;
        assert!(mc.success_rate.covers(1.0 - valid_fraction), "{:?}", mc.success_rate);
        assert_eq!(mc.false_positive.value, 0.0);
        assert!(mc.false_negative.covers(valid_fraction), "{:?}", mc.false_negative);
    }

    #[test]
    fn partition_identity_is_exact() {
        let sim = ToySimulation::new();
        let data: DataSet = crate::sampling::grid(3, sim.space())
            .into_iter()
            .map(|x| sim.data_point(x).unwrap())
            .collect();
        let est = train_estimator_pair(&data, 3).unwrap();
        for seed in 0..10 {
            for n in [2, 3, 7, 100, 997] {
                let mc = mc_characteristics(&est, &sim, &McSettings::new(n, seed)).unwrap();
                assert_eq!(mc.success_rate.value + mc.false_positive.value + mc.false_negative.value, 1.0);
            }
        }
    }

    #[test]
    fn half_width_shrinks_with_sample_count() {
        let sim = ToySimulation::new();
        let p = ConstantPredictor(Outcome::Valid);
        let a = mc_characteristics(&p, &sim, &McSettings::new(4000, 2)).unwrap();
        let b = mc_characteristics(&p, &sim, &McSettings::new(16000, 2)).unwrap();
        let ratio = a.success_rate.half_width / b.success_rate.half_width;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn score_examples() {
        let data = DataSet::from_points(vec![
            DataPoint::new(vec![0.0], Outcome::Valid, 0.0),
            DataPoint::new(vec![1.0], Outcome::Invalid, 0.0),
        ]);
        assert_eq!(score(&ConstantPredictor(Outcome::Valid), &data), 0.5);
        let one = data.prefix(1);
        assert_eq!(score(&ConstantPredictor(Outcome::Invalid), &one), 0.0);
        assert_eq!(score(&ConstantPredictor(Outcome::Valid), &one), 1.0);
    }

    #[test]
    fn validity_ratio_examples() {
        let mk = |v: usize, i: usize| -> DataSet {
            (0..v)
                .map(|k| DataPoint::new(vec![k as f64], Outcome::Valid, 0.0))
                .chain((0..i).map(|k| DataPoint::new(vec![k as f64], Outcome::Invalid, 0.0)))
                .collect()
        };
        assert_eq!(validity_ratio(&mk(5, 4)), ValidityRatio::Finite(1.25));
        assert_eq!(validity_ratio(&mk(0, 4)), ValidityRatio::Finite(0.0));
        assert_eq!(validity_ratio(&mk(3, 0)), ValidityRatio::Undefined { valid: 3, invalid: 0 });
        assert!((validity_ratio(&mk(11, 14)).value().unwrap() - 0.786).abs() < 5e-4);
    }

    #[test]
    fn reference_limits_cover_toy_constants() {
        let sim = ToySimulation::new();
        let exact = toy_reference_limits();
        let est = mc_reference_limits(&sim, &McSettings::new(10_000, 1)).unwrap();
        assert_eq!(est.r_fp.value + est.r_fn.value, 0.5);
        assert!(est.alpha.covers(exact.alpha));
        assert!(est.r_fp.covers(exact.r_fp));
        assert!(est.r_fn.covers(exact.r_fn));
    }

    #[test]
    fn balanced_simulation_gives_quarter_ratios() {
        let space = ParameterSpace::cube(-1.0, 1.0, 2).unwrap();
        let sim = FnSimulation::new(space, |x: &[f64]| {
            (if x[0] >= 0.0 { Outcome::Valid } else { Outcome::Invalid }, 0.0)
        });
        let est = mc_reference_limits(&sim, &McSettings::new(10_000, 4)).unwrap();
        assert!(est.alpha.covers(1.0));
        assert!(est.r_fp.covers(0.25) && est.r_fn.covers(0.25));
    }

    #[test]
    fn degenerate_volumes_are_rejected() {
        let space = ParameterSpace::cube(0.0, 1.0, 1).unwrap();
        let sim = FnSimulation::new(space, |_: &[f64]| (Outcome::Valid, 0.0));
        assert!(matches!(
            mc_reference_limits(&sim, &McSettings::new(100, 1)),
            Err(Error::DegenerateVolume(_))
        ));
    }

    #[test]
    fn generalization_examples() {
        let g = generalization_ratio(1.0, 0.95);
        assert!((g.g.unwrap() - 1.0526).abs() < 1e-4);
        assert_eq!(g.regime, Regime::Oversimplified);
        assert_eq!(generalization_ratio(0.9, 0.9).regime, Regime::Representative);
        assert_eq!(generalization_ratio(0.973, 0.988).regime, Regime::Overcomplicated);
        assert_eq!(generalization_ratio(1.0, 0.0).regime, Regime::Undefined);
    }

    #[test]
    fn toy_pure_grid_report() {
        let sim = ToySimulation::new();
        let setup = crate::engine::ExplorationSetup::new(
            25,
            5,
            sim.space().clone(),
            crate::utility::WeightVector { s: 0.0, o: 0.0, r: 0.0 },
            1,
        );
        let run = crate::engine::explore(&DataSet::new(), sim.space(), &setup, &sim).unwrap();
        let report = characteristics_report(&run, &sim, &McSettings::new(2000, 1)).unwrap();
        assert_eq!(report.t_best, Some(1.0));
        assert_eq!(report.t_worst, Some(-1.0));
        assert_eq!(report.sigma, 1.0);
        assert!(report.success_rate.value.is_finite());
        let json = serde_json::to_string(&report).unwrap();
        let back: ExplorationCharacteristics = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    proptest! {
        #[test]
        fn validity_ratio_permutation_invariant(flags in proptest::collection::vec(any::<bool>(), 1..40), rot in 0usize..40) {
            let pts: Vec<DataPoint> = flags
                .iter()
                .map(|&v| DataPoint::new(vec![0.0], if v { Outcome::Valid } else { Outcome::Invalid }, 0.0))
                .collect();
            let mut rotated = pts.clone();
            rotated.rotate_left(rot % pts.len());
            rotated.reverse();
            prop_assert_eq!(validity_ratio(&DataSet::from_points(pts)), validity_ratio(&DataSet::from_points(rotated)));
        }

        #[test]
        fn partition_sums_exactly_for_any_counts(n in 2usize..5000, a in 0usize..5000, b in 0usize..5000) {
            let a = a % (n + 1);
            let b = b % (n - a + 1);
            let r = a as f64 / n as f64;
            let fp = b as f64 / n as f64;
            let fneg = 1.0 - (r + fp);
            prop_assert_eq!(r + fp + fneg, 1.0);
        }
    }
}
