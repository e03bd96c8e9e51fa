//! Dual-gain observations.
//!
//! A strong-branching evaluation of a candidate yields a downgain and an upgain.
//! Everything downstream works on a single number per candidate, the ε-shifted
//! geometric mean of the pair.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io;
use std::path::Path;

use thiserror::Error;

/// Default ε shift, in objective units.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Geometric means below this are treated as zero gains.
pub const ZERO_GAIN_TOLERANCE: f64 = 1e-9;

/// Column header of the gain-file CSV format.
pub const GAIN_FILE_HEADER: [&str; 4] = ["node_id", "variable_id", "downgain", "upgain"];

#[derive(Debug, Error)]
pub enum GainsError {
    #[error("gain values must be finite and nonnegative (down = {down}, up = {up})")]
    InvalidGain { down: f64, up: f64 },
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("duplicate variable `{variable_id}` in series `{node_id}`")]
    DuplicateVariable { node_id: String, variable_id: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Raw down/up dual gains of one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPair {
    down: f64,
    up: f64,
}

impl GainPair {
    pub fn new(down: f64, up: f64) -> Result<Self, GainsError> {
        if !(down.is_finite() && up.is_finite()) || down < 0.0 || up < 0.0 {
            return Err(GainsError::InvalidGain { down, up });
        }
        Ok(Self { down, up })
    }

    pub fn down(&self) -> f64 {
        self.down
    }

    pub fn up(&self) -> f64 {
        self.up
    }

    pub fn geomean(&self, epsilon: f64) -> Result<GeomGain, GainsError> {
        shifted_geomean(*self, epsilon)
    }
}

/// ε-shifted geometric mean of a gain pair, always nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GeomGain(f64);

impl GeomGain {
    /// Wraps an already aggregated gain. Negative or non-finite values are rejected.
    pub fn new(value: f64) -> Option<Self> {
        (value.is_finite() && value >= 0.0).then_some(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        is_zero_gain(self.0)
    }
}

impl fmt::Display for GeomGain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn is_zero_gain(value: f64) -> bool {
    value < ZERO_GAIN_TOLERANCE
}

/// `sqrt((down + ε)(up + ε)) - ε`.
///
/// Evaluated as `(down·up + ε(down + up)) / (sqrt((down + ε)(up + ε)) + ε)`, which is the
/// same quantity without the cancellation of the subtraction, so `(0, 0)` maps to exactly 0.
pub fn shifted_geomean(pair: GainPair, epsilon: f64) -> Result<GeomGain, GainsError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(GainsError::InvalidEpsilon(epsilon));
    }
    let (d, u) = (pair.down, pair.up);
    let root = ((d + epsilon) * (u + epsilon)).sqrt();
    let value = (d * u + epsilon * (d + u)) / (root + epsilon);
    Ok(GeomGain(value.max(0.0)))
}

/// All candidate evaluations observed at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSeries {
    node_id: String,
    entries: Vec<(String, GainPair)>,
    zero_count: usize,
}

impl GainSeries {
    pub fn new(
        node_id: impl Into<String>,
        entries: Vec<(String, GainPair)>,
    ) -> Result<Self, GainsError> {
        let node_id = node_id.into();
        let mut seen = HashMap::with_capacity(entries.len());
        for (var, _) in &entries {
            if seen.insert(var.as_str(), ()).is_some() {
                return Err(GainsError::DuplicateVariable {
                    node_id,
                    variable_id: var.clone(),
                });
            }
        }
        let zero_count = entries
            .iter()
            .filter(|(_, p)| shifted_geomean(*p, DEFAULT_EPSILON).is_ok_and(|g| g.is_zero()))
            .count();
        Ok(Self {
            node_id,
            entries,
            zero_count,
        })
    }

    pub fn node_id(&self) -> &str {
        &self.node_id
    }

    pub fn entries(&self) -> &[(String, GainPair)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries whose geometric mean (at the default ε) is zero.
    pub fn zero_count(&self) -> usize {
        self.zero_count
    }

    pub fn geomeans(&self, epsilon: f64) -> Result<Vec<GeomGain>, GainsError> {
        self.entries
            .iter()
            .map(|(_, p)| shifted_geomean(*p, epsilon))
            .collect()
    }
}

/// Reads a gain file. Series are returned in order of first appearance of their node id.
pub fn load_gain_series(path: impl AsRef<Path>) -> Result<Vec<GainSeries>, GainsError> {
    let file = std::fs::File::open(path.as_ref())?;
    read_gain_series(file)
}

pub fn read_gain_series<R: io::Read>(reader: R) -> Result<Vec<GainSeries>, GainsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    if !header.is_empty() && header.iter().ne(GAIN_FILE_HEADER.iter().copied()) {
        return Err(GainsError::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                GAIN_FILE_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<(String, Vec<(String, GainPair)>, HashSet<String>)> = Vec::new();

    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(GainsError::Parse {
                    line,
                    message: e.to_string(),
                });
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| GainsError::Parse { line, message };
        if record.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, found {}", record.len())));
        }
        let node = record[0].to_string();
        let var = record[1].to_string();
        if node.is_empty() || var.is_empty() {
            return Err(parse_err("empty identifier".into()));
        }
        let num = |s: &str, what: &str| -> Result<f64, GainsError> {
            s.parse::<f64>()
                .map_err(|_| parse_err(format!("invalid {what} `{s}`")))
        };
        let down = num(&record[2], "downgain")?;
        let up = num(&record[3], "upgain")?;
        let pair = GainPair::new(down, up).map_err(|e| parse_err(e.to_string()))?;

        let slot = *index.entry(node.clone()).or_insert_with(|| {
            groups.push((node.clone(), Vec::new(), HashSet::new()));
            groups.len() - 1
        });
        let group = &mut groups[slot];
        if !group.2.insert(var.clone()) {
            return Err(parse_err(format!(
                "duplicate variable `{var}` in series `{node}`"
            )));
        }
        group.1.push((var, pair));
    }

    groups
        .into_iter()
        .map(|(node, entries, _)| GainSeries::new(node, entries))
        .collect()
}

/// Writes series in the gain-file format with 17 significant digits per value.
pub fn write_gain_series<W: io::Write>(writer: W, series: &[GainSeries]) -> Result<(), GainsError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(GAIN_FILE_HEADER)?;
    for s in series {
        for (var, pair) in &s.entries {
            wtr.write_record([
                s.node_id.as_str(),
                var.as_str(),
                &format!("{:.16e}", pair.down),
                &format!("{:.16e}", pair.up),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a Pandora instance pool: CSV with a single `geomean_gain` column.
pub fn read_geomean_pool<R: io::Read>(reader: R) -> Result<Vec<GeomGain>, GainsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != 1 || &header[0] != "geomean_gain" {
        return Err(GainsError::Parse {
            line: 1,
            message: "expected header `geomean_gain`".into(),
        });
    }
    let mut pool = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| GainsError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let raw = &record[0];
        let value = raw
            .parse::<f64>()
            .ok()
            .and_then(GeomGain::new)
            .ok_or_else(|| GainsError::Parse {
                line,
                message: format!("invalid gain `{raw}`"),
            })?;
        pool.push(value);
    }
    Ok(pool)
}

pub fn load_geomean_pool(path: impl AsRef<Path>) -> Result<Vec<GeomGain>, GainsError> {
    read_geomean_pool(std::fs::File::open(path.as_ref())?)
}

pub fn write_geomean_pool<W: io::Write>(writer: W, pool: &[GeomGain]) -> Result<(), GainsError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["geomean_gain"])?;
    for g in pool {
        wtr.write_record([format!("{:.16e}", g.value())])?;
    }
    wtr.flush()?;
    Ok(())
}
