//! Experiment configuration documents.

use std::fmt;

use morbit::decomp::PeriodicDecomposition;
use morbit::dynsys::{DiscreteMeasure, Point, PointDoc, ShiftPoint, System};
use morbit::num::{rat, Num, Rational};
use morbit::periodic::{OrbitSource, SearchCaps};
use morbit::pseudometric::Coarsening;
use morbit::shadowing::BlockSchedule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Experiment kinds accepted by `run`, `validate` and `describe`.
pub const KINDS: [&str; 9] = [
    "dist", "ebar", "vset", "density", "closable", "linkable", "aapo", "trace", "decomp",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    Exact,
    Float,
}

impl fmt::Display for Arithmetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arithmetic::Exact => "exact",
            Arithmetic::Float => "float",
        })
    }
}

/// The top-level document; `params` is read according to `kind`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    pub system: System,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "exact")]
    pub arithmetic: Arithmetic,
    #[serde(default)]
    pub caps: SearchCaps,
    #[serde(default)]
    pub params: Value,
    /// File stem of the outputs; defaults to the kind.
    #[serde(default)]
    pub output: Option<String>,
}

fn exact() -> Arithmetic {
    Arithmetic::Exact
}

/// A point document, or a seeded random point.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSpec {
    Interval {
        value: Num,
    },
    Circle {
        angle: Num,
    },
    Shift {
        #[serde(default)]
        pre: String,
        period: String,
        #[serde(default = "two")]
        alphabet: u8,
    },
    /// `length` uniform random symbols followed by `tail^∞`.
    RandomShift {
        length: usize,
        #[serde(default = "two")]
        alphabet: u8,
        #[serde(default = "zero_word")]
        tail: String,
    },
    /// `k / denominator` with `k` uniform in `0..=denominator`.
    RandomInterval {
        #[serde(default = "prime_denominator")]
        denominator: u64,
    },
    /// A uniform random angle `k / denominator`.
    RandomCircle {
        #[serde(default = "prime_denominator")]
        denominator: u64,
    },
}

fn two() -> u8 {
    2
}

fn zero_word() -> String {
    "0".into()
}

fn prime_denominator() -> u64 {
    10007
}

/// Resolves point specs against one seeded stream, in document order.
pub struct Resolver {
    rng: ChaCha8Rng,
    arithmetic: Arithmetic,
}

impl Resolver {
    pub fn new(seed: u64, arithmetic: Arithmetic) -> Resolver {
        Resolver {
            rng: ChaCha8Rng::seed_from_u64(seed),
            arithmetic,
        }
    }

    pub fn point(&mut self, spec: &PointSpec) -> Result<Point, CliError> {
        let p = match spec {
            PointSpec::Interval { value } => Point::try_from(PointDoc::Interval { value: value.clone() })?,
            PointSpec::Circle { angle } => Point::try_from(PointDoc::Circle { angle: angle.clone() })?,
            PointSpec::Shift { pre, period, alphabet } => {
                Point::Shift(ShiftPoint::parse(*alphabet, pre, period)?)
            }
            PointSpec::RandomShift { length, alphabet, tail } => {
                let tail = ShiftPoint::parse(*alphabet, "", tail)?.period().to_vec();
                Point::Shift(ShiftPoint::random_prefix(*alphabet, *length, tail, &mut self.rng)?)
            }
            PointSpec::RandomInterval { denominator } => {
                let k = self.rng.gen_range(0..=*denominator);
                Point::interval(rat(k as i64, *denominator as i64))
            }
            PointSpec::RandomCircle { denominator } => {
                let k = self.rng.gen_range(0..*denominator);
                Point::circle(rat(k as i64, *denominator as i64))
            }
        };
        Ok(self.cast(p))
    }

    pub fn points(&mut self, specs: &[PointSpec]) -> Result<Vec<Point>, CliError> {
        specs.iter().map(|s| self.point(s)).collect()
    }

    /// Applies `--float` to a point.
    pub fn cast(&self, p: Point) -> Point {
        match self.arithmetic {
            Arithmetic::Exact => p,
            Arithmetic::Float => p.to_float(),
        }
    }

    pub fn source(&mut self, spec: &SourceSpec, fallback: Option<&Point>) -> Result<OrbitSource, CliError> {
        Ok(match spec {
            SourceSpec::Explicit { points } => OrbitSource::Explicit {
                points: self.points(points)?,
            },
            SourceSpec::ShiftNecklaces => OrbitSource::ShiftNecklaces,
            SourceSpec::IntervalBranches => OrbitSource::IntervalBranches,
            SourceSpec::ShiftTruncations { of: Some(of) } => OrbitSource::ShiftTruncations { of: self.point(of)? },
            SourceSpec::ShiftTruncations { of: None } => OrbitSource::ShiftTruncations {
                of: fallback
                    .cloned()
                    .ok_or_else(|| CliError::config("params.source.of", "missing field `of`"))?,
            },
        })
    }
}

/// Candidate periodic orbits; mirrors the library's sources with point specs.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Explicit { points: Vec<PointSpec> },
    ShiftNecklaces,
    IntervalBranches,
    /// Truncations of `of`, or of the first target when omitted.
    ShiftTruncations {
        #[serde(default)]
        of: Option<PointSpec>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistParams {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
}

/// Explicit horizons, or `count` doublings from `start`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Horizons {
    List(Vec<usize>),
    Doubling { start: usize, count: usize },
}

impl Horizons {
    pub fn resolve(&self) -> Result<Vec<usize>, CliError> {
        let v = match self {
            Horizons::List(v) => v.clone(),
            Horizons::Doubling { start, count } => {
                let mut v = Vec::with_capacity(*count);
                let mut h = *start;
                for _ in 0..*count {
                    v.push(h);
                    h = h.checked_mul(2).ok_or_else(|| CliError::config("horizons", "doubling overflows"))?;
                }
                v
            }
        };
        if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config("horizons", "must be positive and strictly increasing"));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EbarParams {
    pub x: PointSpec,
    pub y: PointSpec,
    pub horizons: Horizons,
    #[serde(default = "tail_window")]
    pub tail_window: usize,
}

fn tail_window() -> usize {
    morbit::pseudometric::DEFAULT_TAIL_WINDOW
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VsetParams {
    pub x: PointSpec,
    pub checkpoints: Horizons,
    #[serde(default)]
    pub coarsening: Option<Coarsening>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    pub source: SourceSpec,
    /// One target for the ergodic form, several for the stitched form.
    pub targets: Vec<PointSpec>,
    pub eps: f64,
    #[serde(default = "one")]
    pub min_n: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosableParams {
    pub source: SourceSpec,
    pub x: PointSpec,
    pub eps: f64,
    #[serde(default = "one")]
    pub min_n: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkableParams {
    pub y1: PointSpec,
    pub y2: PointSpec,
    #[serde(with = "morbit::num::rational_str")]
    pub lambda: Rational,
    pub eps: f64,
    pub source: SourceSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AapoParams {
    pub schedule: BlockSchedule,
    /// Number of points built; defaults to the whole schedule.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "threshold")]
    pub threshold: f64,
    /// Horizons reported by the average-jump check; defaults to each `Q_n`.
    #[serde(default)]
    pub horizons: Option<Horizons>,
    #[serde(default)]
    pub coarsening: Option<Coarsening>,
}

fn threshold() -> f64 {
    0.02
}

/// The sequence whose tracing error is measured.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Points { points: Vec<PointSpec> },
    Schedule { schedule: BlockSchedule, horizon: usize },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceParams {
    pub sequence: SequenceSpec,
    pub x: PointSpec,
    pub horizons: Horizons,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftParams {
    pub x: PointSpec,
    pub y: PointSpec,
    pub n: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompParams {
    pub decomposition: PeriodicDecomposition,
    #[serde(default)]
    pub lift: Option<LiftParams>,
}

/// Reads `params` of the given kind, naming the offending field on failure.
pub fn params<T: serde::de::DeserializeOwned>(cfg: &ExperimentConfig) -> Result<T, CliError> {
    serde_json::from_value(cfg.params.clone()).map_err(|e| CliError::config("params", e.to_string()))
}

impl ExperimentConfig {
    pub fn parse(bytes: &[u8]) -> Result<ExperimentConfig, CliError> {
        let cfg: ExperimentConfig = serde_json::from_slice(bytes).map_err(|e| CliError::config("config", e.to_string()))?;
        if !KINDS.contains(&cfg.kind.as_str()) {
            return Err(CliError::config("kind", format!("unknown experiment kind `{}`", cfg.kind)));
        }
        let c = &cfg.caps;
        if c.max_period == 0 || c.max_horizon == 0 || c.assignment == 0 || c.multiples == 0 {
            return Err(CliError::config("caps", "caps must be positive"));
        }
        Ok(cfg)
    }

    pub fn stem(&self) -> &str {
        self.output.as_deref().unwrap_or(&self.kind)
    }
}
