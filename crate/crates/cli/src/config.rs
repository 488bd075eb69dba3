//! JSON run configuration.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use odex_core::sim::ProcessSimulation;
use odex_core::{Algorithm, ExplorationSetup, McSettings, ParameterSpace, Simulation, ToySimulation, WeightVector};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SimulationConfig {
    Toy,
    /// A child process speaking the line protocol on stdin/stdout.
    External { command: Vec<String> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl RawSpace {
    fn build(&self, field: &str) -> Result<ParameterSpace> {
        ParameterSpace::new(self.lower.clone(), self.upper.clone()).map_err(|e| anyhow!("{field}: {e}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    s: f64,
    o: f64,
    r: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSetup {
    name: String,
    algorithm: String,
    samples: usize,
    #[serde(default)]
    grid_edges: usize,
    grid_space: Option<RawSpace>,
    weights: Option<RawWeights>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    #[serde(default = "default_mc_samples")]
    samples: usize,
    #[serde(default = "default_confidence")]
    confidence: f64,
    #[serde(default)]
    seed: u64,
}

fn default_mc_samples() -> usize {
    odex_core::metrics::DEFAULT_MC_SAMPLES
}

fn default_confidence() -> f64 {
    odex_core::metrics::DEFAULT_CONFIDENCE
}

impl Default for RawMonteCarlo {
    fn default() -> Self {
        Self {
            samples: default_mc_samples(),
            confidence: default_confidence(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    simulation: SimulationConfig,
    space: Option<RawSpace>,
    setups: Vec<RawSetup>,
    #[serde(default)]
    monte_carlo: RawMonteCarlo,
    output_dir: Option<String>,
}

#[derive(Debug, Clone)]
pub struct NamedSetup {
    pub name: String,
    pub algorithm: Algorithm,
    pub setup: ExplorationSetup,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub space: ParameterSpace,
    pub setups: Vec<NamedSetup>,
    pub monte_carlo: McSettings,
    pub output_dir: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let space = resolve_space(&raw.simulation, raw.space.as_ref())?;
        if raw.setups.is_empty() {
            bail!("setups: at least one setup is required");
        }
        let mut setups = Vec::with_capacity(raw.setups.len());
        for (i, s) in raw.setups.iter().enumerate() {
            let field = format!("setups[{i}]");
            if s.name.is_empty() || s.name.contains(['/', '\\']) {
                bail!("{field}.name: must be a nonempty file name, got '{}'", s.name);
            }
            if setups.iter().any(|n: &NamedSetup| n.name == s.name) {
                bail!("{field}.name: duplicate setup name '{}'", s.name);
            }
            let algorithm: Algorithm = s.algorithm.parse().map_err(|_| {
                anyhow!(
                    "{field}.algorithm: unknown algorithm '{}' (expected one of {})",
                    s.algorithm,
                    Algorithm::ALL.map(|a| a.name()).join(", ")
                )
            })?;
            let grid_space = match &s.grid_space {
                Some(g) => g.build(&format!("{field}.grid_space"))?,
                None => space.clone(),
            };
            let weights = match (&s.weights, algorithm) {
                (Some(w), _) => WeightVector::new(w.s, w.o, w.r).map_err(|e| anyhow!("{field}.weights: {e}"))?,
                (None, Algorithm::Ours) => bail!("{field}.weights: required for algorithm 'ours'"),
                (None, _) => WeightVector { s: 0.0, o: 0.0, r: 0.0 },
            };
            let setup = ExplorationSetup::new(s.samples, s.grid_edges, grid_space, weights, s.seed);
            setup.validate(&space).map_err(|e| anyhow!("{field}: {e}"))?;
            if algorithm == Algorithm::Ours && weights.is_degenerate() && setup.grid_size() < setup.samples {
                bail!("{field}.weights: all-zero weights only allowed when the grid fills the budget");
            }
            if matches!(algorithm, Algorithm::KrigingBinary | Algorithm::KrigingContinuous) && setup.grid_size() == 0 {
                bail!("{field}.grid_edges: Kriging needs a start-up grid");
            }
            setups.push(NamedSetup {
                name: s.name.clone(),
                algorithm,
                setup,
            });
        }
        let mc = &raw.monte_carlo;
        if mc.samples < 2 {
            bail!("monte_carlo.samples: need at least 2");
        }
        if !(mc.confidence > 0.0 && mc.confidence < 1.0) {
            bail!("monte_carlo.confidence: must lie in (0, 1)");
        }
        Ok(Self {
            simulation: raw.simulation,
            space,
            setups,
            monte_carlo: McSettings {
                samples: mc.samples,
                confidence: mc.confidence,
                seed: mc.seed,
            },
            output_dir: raw.output_dir,
        })
    }
}

fn resolve_space(sim: &SimulationConfig, space: Option<&RawSpace>) -> Result<ParameterSpace> {
    match sim {
        SimulationConfig::Toy => {
            let toy = ToySimulation::new().space().clone();
            if let Some(s) = space {
                if s.build("space")? != toy {
                    bail!("space: the toy simulation is fixed to [-2, 2]^2");
                }
            }
            Ok(toy)
        }
        SimulationConfig::External { command } => {
            if command.is_empty() {
                bail!("simulation.command: must not be empty");
            }
            space
                .ok_or_else(|| anyhow!("space: required for an external simulation"))?
                .build("space")
        }
    }
}

pub fn open_simulation(sim: &SimulationConfig, space: &ParameterSpace) -> odex_core::Result<Box<dyn Simulation>> {
    Ok(match sim {
        SimulationConfig::Toy => Box::new(ToySimulation::new()),
        SimulationConfig::External { command } => Box::new(ProcessSimulation::spawn(command, space.clone())?),
    })
}
