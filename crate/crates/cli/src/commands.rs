//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use odex_core::engine::{run_algorithm, ExplorationRun, RunAborted};
use odex_core::metrics::{assess, mc_reference_limits, write_progression, ProgressionRow};
use odex_core::{DataSet, Error, ExplorationCharacteristics, McSettings, Simulation};
use serde::Serialize;

use crate::config::{open_simulation, RunConfig, SimulationConfig};

/// Exit status of a failed command.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const USAGE: u8 = 2;
pub const SIMULATION: u8 = 3;

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: USAGE,
            error: error.into(),
        }
    }

    fn core(error: Error, context: String) -> Self {
        let code = match error {
            Error::Simulation(_) | Error::OutOfDomain(_) | Error::Io(_) => SIMULATION,
            _ => USAGE,
        };
        Self {
            code,
            error: anyhow::Error::new(error).context(context),
        }
    }

    fn io(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 1,
            error: error.into(),
        }
    }
}

pub type Outcome = std::result::Result<(), Failure>;

pub struct Options {
    pub out_dir: Option<PathBuf>,
    pub dump_models: bool,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    name: &'a str,
    monte_carlo: McSettings,
    characteristics: &'a ExplorationCharacteristics,
}

fn output_dir(opts: &Options, config: Option<&RunConfig>) -> Result<PathBuf, Failure> {
    let dir = opts
        .out_dir
        .clone()
        .or_else(|| config.and_then(|c| c.output_dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(Failure::io)?;
    Ok(dir)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>) -> Result<(), Failure> {
    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(Failure::io)?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush().map_err(Into::into))
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::io)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn write_points(path: &Path, data: &DataSet) -> Result<(), Failure> {
    write_file(path, |w| Ok(data.write_csv(w)?))
}

fn write_run(dir: &Path, name: &str, run: &ExplorationRun) -> Result<(), Failure> {
    write_points(&dir.join(format!("{name}.points.csv")), &run.dataset)?;
    write_file(&dir.join(format!("{name}.trace.jsonl")), |w| Ok(run.write_trace(w)?))
}

fn open(config: &RunConfig) -> Result<Box<dyn Simulation>, Failure> {
    open_simulation(&config.simulation, &config.space)
        .map_err(|e| Failure::core(e, "cannot start the simulation".into()))
}

fn report_and_dump(
    dir: &Path,
    name: &str,
    data: &DataSet,
    algorithm: Option<odex_core::Algorithm>,
    sim: &dyn Simulation,
    mc: &McSettings,
    opts: &Options,
) -> Result<ExplorationCharacteristics, Failure> {
    let (mut report, estimator) =
        assess(data, sim, mc).map_err(|e| Failure::core(e, format!("{name}: cannot compute the report")))?;
    report.algorithm = algorithm;
    write_json(
        &dir.join(format!("{name}.report.json")),
        &ReportFile {
            name,
            monte_carlo: *mc,
            characteristics: &report,
        },
    )?;
    if opts.dump_models {
        write_json(&dir.join(format!("{name}.models.json")), &estimator.summary())?;
    }
    Ok(report)
}

fn aborted(dir: &Path, name: &str, a: RunAborted) -> Failure {
    // Keep whatever was evaluated before the failure.
    if let Err(f) = write_run(dir, name, &a.partial) {
        return f;
    }
    Failure::core(a.error, format!("{name}: run aborted after {} points", a.partial.dataset.len()))
}

pub fn explore(config_path: &Path, opts: &Options) -> Outcome {
    let config = RunConfig::load(config_path).map_err(Failure::usage)?;
    let dir = output_dir(opts, Some(&config))?;
    let sim = open(&config)?;
    for s in &config.setups {
        let run = run_algorithm(s.algorithm, &config.space, &s.setup, sim.as_ref()).map_err(|a| aborted(&dir, &s.name, a))?;
        write_run(&dir, &s.name, &run)?;
        report_and_dump(&dir, &s.name, &run.dataset, Some(s.algorithm), sim.as_ref(), &config.monte_carlo, opts)?;
    }
    Ok(())
}

pub struct Range {
    pub start: usize,
    pub end: usize,
    pub step: usize,
    pub prefix_mode: bool,
}

pub fn benchmark(config_path: &Path, range: &Range, opts: &Options) -> Outcome {
    let config = RunConfig::load(config_path).map_err(Failure::usage)?;
    if range.step == 0 || range.start > range.end {
        return Err(Failure::usage(anyhow::anyhow!(
            "--n-start/--n-end/--n-step: need n-start <= n-end and n-step >= 1"
        )));
    }
    let ns: Vec<usize> = (range.start..=range.end).step_by(range.step).collect();
    for s in &config.setups {
        if range.start < s.setup.grid_size() {
            return Err(Failure::usage(anyhow::anyhow!(
                "--n-start: {} is below the start-up grid of {} ({} points)",
                range.start,
                s.name,
                s.setup.grid_size()
            )));
        }
    }
    let dir = output_dir(opts, Some(&config))?;
    let sim = open(&config)?;
    let mut rows = Vec::new();
    match mc_reference_limits(sim.as_ref(), &config.monte_carlo) {
        Ok(limits) => rows.push(ProgressionRow::reference(&limits)),
        Err(Error::DegenerateVolume(why)) => eprintln!("warning: no reference limits ({why})"),
        Err(e) => return Err(Failure::core(e, "reference limits".into())),
    }
    for s in &config.setups {
        let run_at = |n: usize| {
            let mut setup = s.setup.clone();
            setup.samples = n;
            let label = format!("{}_{n}", s.name);
            run_algorithm(s.algorithm, &config.space, &setup, sim.as_ref()).map_err(|a| aborted(&dir, &label, a))
        };
        let full = if range.prefix_mode { Some(run_at(range.end)?) } else { None };
        for &n in &ns {
            let label = format!("{}_{n}", s.name);
            let data = match &full {
                Some(run) => run.dataset.prefix(n),
                None => {
                    let run = run_at(n)?;
                    write_run(&dir, &label, &run)?;
                    run.dataset
                }
            };
            let (mut report, _) = assess(&data, sim.as_ref(), &config.monte_carlo)
                .map_err(|e| Failure::core(e, format!("{label}: cannot compute the report")))?;
            report.algorithm = Some(s.algorithm);
            rows.push(ProgressionRow::from_report(&s.name, &report));
        }
        if let Some(run) = &full {
            write_run(&dir, &s.name, run)?;
        }
    }
    write_file(&dir.join("benchmark.csv"), |w| Ok(write_progression(&rows, w)?))
}

pub struct ReportArgs {
    pub points: PathBuf,
    pub sim: String,
    pub config: Option<PathBuf>,
    pub mc: McSettings,
    pub name: Option<String>,
}

pub fn report(args: &ReportArgs, opts: &Options) -> Outcome {
    let (simulation, space) = match args.sim.as_str() {
        "toy" => {
            let toy = odex_core::ToySimulation::new();
            (SimulationConfig::Toy, toy.space().clone())
        }
        "external" => {
            let path = args
                .config
                .as_ref()
                .ok_or_else(|| Failure::usage(anyhow::anyhow!("--config: required with --sim external")))?;
            let c = RunConfig::load(path).map_err(Failure::usage)?;
            (c.simulation, c.space)
        }
        other => return Err(Failure::usage(anyhow::anyhow!("--sim: unknown simulation '{other}' (toy, external)"))),
    };
    if args.mc.samples < 2 || !(args.mc.confidence > 0.0 && args.mc.confidence < 1.0) {
        return Err(Failure::usage(anyhow::anyhow!("--mc-n must be >= 2 and --confidence in (0, 1)")));
    }
    let file = File::open(&args.points)
        .with_context(|| format!("cannot open {}", args.points.display()))
        .map_err(Failure::usage)?;
    let data = DataSet::read_csv(file)
        .with_context(|| format!("malformed points file {}", args.points.display()))
        .map_err(Failure::usage)?;
    if data.is_empty() {
        return Err(Failure::usage(anyhow::anyhow!("{}: no data points", args.points.display())));
    }
    if data.dim() != Some(space.dim()) {
        return Err(Failure::usage(anyhow::anyhow!(
            "{}: points have dimension {:?}, the simulation expects {}",
            args.points.display(),
            data.dim(),
            space.dim()
        )));
    }
    let name = match &args.name {
        Some(n) => n.clone(),
        None => {
            let stem = args.points.file_name().and_then(|s| s.to_str()).unwrap_or("points");
            stem.trim_end_matches(".csv").trim_end_matches(".points").to_string()
        }
    };
    let dir = output_dir(opts, None)?;
    let sim = open_simulation(&simulation, &space).map_err(|e| Failure::core(e, "cannot start the simulation".into()))?;
    report_and_dump(&dir, &name, &data, None, sim.as_ref(), &args.mc, opts)?;
    Ok(())
}
