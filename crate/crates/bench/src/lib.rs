//! Shared fixtures for the benchmarks.

use odex_core::{latin_hypercube, DataSet, Simulation, ToySimulation};

/// `n` LHS-placed toy evaluations.
pub fn toy_data(n: usize, seed: u64) -> DataSet {
    let sim = ToySimulation::new();
    let mut data = DataSet::new();
    for x in latin_hypercube(n, sim.space(), seed) {
        data.push(sim.data_point(x).expect("toy is total"));
    }
    data
}
