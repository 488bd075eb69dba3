//! Evaluated data points and chronological data sets.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary simulation outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Valid,
    Invalid,
}

impl Outcome {
    pub fn is_valid(self) -> bool {
        self == Outcome::Valid
    }

    pub fn opposite(self) -> Outcome {
        match self {
            Outcome::Valid => Outcome::Invalid,
            Outcome::Invalid => Outcome::Valid,
        }
    }

    /// `+1` for valid, `-1` for invalid (positive means valid).
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Valid => 1.0,
            Outcome::Invalid => -1.0,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Valid => "valid",
            Outcome::Invalid => "invalid",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "valid" => Ok(Outcome::Valid),
            "invalid" => Ok(Outcome::Invalid),
            other => Err(Error::Parse(format!("unknown outcome '{other}'"))),
        }
    }
}

/// One simulation evaluation `(x, y, t)`. The target is stored for invalid
/// outcomes too, even though it carries no meaning there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: Vec<f64>,
    pub outcome: Outcome,
    pub target: f64,
}

impl DataPoint {
    pub fn new(x: Vec<f64>, outcome: Outcome, target: f64) -> Self {
        Self { x, outcome, target }
    }

    pub fn is_valid(&self) -> bool {
        self.outcome.is_valid()
    }
}

/// Data points in evaluation order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    points: Vec<DataPoint>,
}

impl DataSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: Vec<DataPoint>) -> Self {
        Self { points }
    }

    pub fn push(&mut self, point: DataPoint) {
        self.points.push(point);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DataPoint> {
        self.points.iter()
    }

    /// Parameter dimension, if the set is nonempty.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.x.len())
    }

    /// The evaluated parameters `D_x`, in evaluation order.
    pub fn params(&self) -> Vec<&[f64]> {
        self.points.iter().map(|p| p.x.as_slice()).collect()
    }

    pub fn outcomes(&self) -> Vec<Outcome> {
        self.points.iter().map(|p| p.outcome).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.target).collect()
    }

    pub fn count_valid(&self) -> usize {
        self.points.iter().filter(|p| p.is_valid()).count()
    }

    pub fn count_invalid(&self) -> usize {
        self.len() - self.count_valid()
    }

    pub fn has_both_classes(&self) -> bool {
        let valid = self.count_valid();
        valid > 0 && valid < self.len()
    }

    /// The first `n` points (all of them when `n >= len`).
    pub fn prefix(&self, n: usize) -> DataSet {
        DataSet::from_points(self.points[..n.min(self.len())].to_vec())
    }

    /// `(t_min, t_max)` over the valid points only.
    pub fn extremal_targets(&self) -> Result<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.is_valid())
            .map(|p| p.target)
            .fold(None, |acc: Option<(f64, f64)>, t| match acc {
                None => Some((t, t)),
                Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
            })
            .ok_or(Error::NoValidData)
    }

    /// Copy in which every invalid target is replaced by the worst valid target.
    pub fn impute_invalid_targets(&self) -> Result<DataSet> {
        let (t_min, _) = self.extremal_targets()?;
        Ok(DataSet::from_points(
            self.points
                .iter()
                .map(|p| {
                    let mut p = p.clone();
                    if !p.is_valid() {
                        p.target = t_min;
                    }
                    p
                })
                .collect(),
        ))
    }

    /// Writes `x1,...,xp,outcome,target,iteration`. Floats use the shortest
    /// decimal representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let dim = self.dim().unwrap_or(0);
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        header.extend(["outcome", "target", "iteration"].map(String::from));
        out.write_record(&header)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row: Vec<String> = p.x.iter().map(|v| v.to_string()).collect();
            row.push(p.outcome.to_string());
            row.push(p.target.to_string());
            row.push(i.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<DataSet> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let cols: Vec<&str> = header.iter().map(str::trim).collect();
        if cols.len() < 4 || cols[cols.len() - 3..] != ["outcome", "target", "iteration"] {
            return Err(Error::Parse(
                "header must be x1,...,xp,outcome,target,iteration".into(),
            ));
        }
        let dim = cols.len() - 3;
        for (i, c) in cols[..dim].iter().enumerate() {
            if *c != format!("x{}", i + 1) {
                return Err(Error::Parse(format!("unexpected column '{c}'")));
            }
        }
        let parse = |s: &str, line: usize| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("record {line}: '{s}' is not a number")))
        };
        let mut points = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != dim + 3 {
                return Err(Error::Parse(format!(
                    "record {line}: expected {} fields, found {}",
                    dim + 3,
                    record.len()
                )));
            }
            let x = (0..dim)
                .map(|i| parse(&record[i], line))
                .collect::<Result<Vec<_>>>()?;
            let outcome: Outcome = record[dim].parse()?;
            let target = parse(&record[dim + 1], line)?;
            points.push(DataPoint::new(x, outcome, target));
        }
        Ok(DataSet::from_points(points))
    }
}

impl FromIterator<DataPoint> for DataSet {
    fn from_iter<I: IntoIterator<Item = DataPoint>>(iter: I) -> Self {
        DataSet::from_points(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a DataSet {
    type Item = &'a DataPoint;
    type IntoIter = std::slice::Iter<'a, DataPoint>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}
