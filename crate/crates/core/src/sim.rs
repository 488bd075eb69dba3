//! The black-box simulation contract and the bundled simulations.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use crate::data::{DataPoint, Outcome};
use crate::error::{Error, Result};
use crate::space::ParameterSpace;

/// Result of a single deterministic simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub outcome: Outcome,
    pub target: f64,
}

/// A deterministic mapping from parameters to `(outcome, target)`.
///
/// Implementations must be callable from several threads; the exploration
/// engine itself evaluates sequentially.
pub trait Simulation: Sync {
    fn space(&self) -> &ParameterSpace;

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation>;

    fn dim(&self) -> usize {
        self.space().dim()
    }

    fn data_point(&self, x: Vec<f64>) -> Result<DataPoint> {
        let e = self.evaluate(&x)?;
        Ok(DataPoint::new(x, e.outcome, e.target))
    }
}

/// Two quarter disks of radius `sqrt(3)` in the first and third quadrants of
/// `[-2, 2]^2` are valid; the target is `x1`.
#[derive(Debug, Clone)]
pub struct ToySimulation {
    space: ParameterSpace,
}

impl ToySimulation {
    pub fn new() -> Self {
        Self {
            space: ParameterSpace::cube(-2.0, 2.0, 2).expect("static bounds"),
        }
    }
}

impl Default for ToySimulation {
    fn default() -> Self {
        Self::new()
    }
}

impl Simulation for ToySimulation {
    fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.space.check_dim(x)?;
        if !self.space.contains(x) {
            return Err(Error::OutOfDomain(x.to_vec()));
        }
        let norm = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let valid = norm <= 3f64.sqrt() && x[0] * x[1] >= 0.0;
        Ok(Evaluation {
            outcome: if valid { Outcome::Valid } else { Outcome::Invalid },
            target: x[0],
        })
    }
}

/// Closed-form reference limits of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceLimits {
    pub alpha: f64,
    pub r_fp: f64,
    pub r_fn: f64,
}

/// Infinite-sampling validity ratio and coin-toss error ratios of the toy.
pub fn toy_reference_limits() -> ReferenceLimits {
    ReferenceLimits {
        alpha: 3.0 * PI / (32.0 - 3.0 * PI),
        r_fp: 3.0 * PI / 64.0,
        r_fn: 0.5 - 3.0 * PI / 64.0,
    }
}

/// Adapts a closure into a [`Simulation`]. Handy for synthetic test problems.
pub struct FnSimulation<F> {
    space: ParameterSpace,
    f: F,
}

impl<F> FnSimulation<F>
where
    F: Fn(&[f64]) -> (Outcome, f64) + Sync,
{
    pub fn new(space: ParameterSpace, f: F) -> Self {
        Self { space, f }
    }
}

impl<F> Simulation for FnSimulation<F>
where
    F: Fn(&[f64]) -> (Outcome, f64) + Sync,
{
    fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.space.check_dim(x)?;
        let (outcome, target) = (self.f)(x);
        Ok(Evaluation { outcome, target })
    }
}

struct Pipe {
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    stdout: BufReader<ChildStdout>,
}

/// An external simulator running as a child process.
///
/// Protocol, one exchange per evaluation: the parameter vector is written to
/// the child's stdin as space-separated decimals on one line; the child
/// answers `valid <t>` or `invalid` (optionally `invalid <t>`) on one line
/// of stdout. Invalid answers without a target get a NaN placeholder, which
/// the estimator training imputes.
pub struct ProcessSimulation {
    space: ParameterSpace,
    pipe: Mutex<Pipe>,
}

impl ProcessSimulation {
    pub fn spawn(command: &[String], space: ParameterSpace) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Simulation("empty simulator command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Simulation(format!("cannot start '{program}': {e}")))?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            space,
            pipe: Mutex::new(Pipe {
                child,
                stdin: Some(stdin),
                stdout,
            }),
        })
    }
}

/// Parses one answer line of the child-process protocol.
pub fn parse_answer(line: &str) -> Result<Evaluation> {
    let mut words = line.split_whitespace();
    let outcome: Outcome = words
        .next()
        .ok_or_else(|| Error::Simulation("empty answer".into()))?
        .parse()
        .map_err(|_| Error::Simulation(format!("unrecognized answer '{}'", line.trim())))?;
    let target = match words.next() {
        Some(w) => w
            .parse::<f64>()
            .map_err(|_| Error::Simulation(format!("bad target in answer '{}'", line.trim())))?,
        None if outcome == Outcome::Invalid => f64::NAN,
        None => return Err(Error::Simulation("valid answer without target".into())),
    };
    if words.next().is_some() {
        return Err(Error::Simulation(format!("trailing data in answer '{}'", line.trim())));
    }
    Ok(Evaluation { outcome, target })
}

impl Simulation for ProcessSimulation {
    fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.space.check_dim(x)?;
        let mut pipe = self
            .pipe
            .lock()
            .map_err(|_| Error::Simulation("simulator pipe poisoned".into()))?;
        let request = x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        let io_err = |e: std::io::Error| Error::Simulation(format!("pipe error: {e}"));
        let stdin = pipe
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Simulation("simulator input closed".into()))?;
        writeln!(stdin, "{request}").map_err(io_err)?;
        stdin.flush().map_err(io_err)?;
        let mut line = String::new();
        let read = pipe.stdout.read_line(&mut line).map_err(io_err)?;
        if read == 0 {
            return Err(Error::Simulation("simulator closed its output".into()));
        }
        parse_answer(&line)
    }
}

impl Drop for ProcessSimulation {
    fn drop(&mut self) {
        if let Ok(pipe) = self.pipe.get_mut() {
            if let Some(mut stdin) = pipe.stdin.take() {
                let _ = stdin.flush();
            }
            let _ = pipe.child.kill();
            let _ = pipe.child.wait();
        }
    }
}
