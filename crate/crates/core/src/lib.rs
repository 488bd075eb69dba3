//! Adaptive exploration of black-box simulations with binary feasibility
//! outcomes, plus the baselines and metrics used to judge an exploration.

pub mod data;
pub mod de;
pub mod engine;
pub mod error;
pub mod kernel;
pub mod metrics;
pub mod sampling;
pub mod seed;
pub mod sim;
pub mod space;
pub mod utility;

pub use data::{DataPoint, DataSet, Outcome};
pub use de::{de_maximize, DeConfig, DeResult};
pub use engine::{
    expected_improvement, explore, feasibility_border_distance, kriging_explore, run_algorithm, suggest, Algorithm,
    ExplorationRun, ExplorationSetup, KrigingMode, RunAborted, TraceRecord,
};
pub use error::{Error, Result};
pub use kernel::{train_estimator_pair, EstimatorPair, GprModel, Prediction};
pub use metrics::{
    assess, characteristics_report, ExplorationCharacteristics, McEstimate, McSettings, ValidityRatio,
};
pub use sampling::{grid, latin_hypercube, uniform_random};
pub use seed::{SeedSequence, Stream};
pub use sim::{toy_reference_limits, ProcessSimulation, Simulation, ToySimulation};
pub use space::ParameterSpace;
pub use utility::{UtilityVector, WeightVector};
