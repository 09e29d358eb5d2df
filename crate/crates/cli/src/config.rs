//! JSON shapes accepted on the command line (see docs/configs.md).

use bohr_core::birkhoff::{Observable, Point, SystemHandle};
use bohr_core::horseshoe::CodedHorseshoe;
use bohr_core::symbolic::{PointSpec, Sidedness, Word};
use bohr_core::toral::{IntMatrix, ToralAffineMap};
use bohr_core::weights::{geometric_grid, WeightSpec};
use clap::Args;
use serde::Deserialize;

use crate::error::CliError;
use crate::output::Emitter;

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Largest N; the default grid is the powers of two up to N, plus N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Explicit comma-separated grid, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
}

impl GridArgs {
    pub fn resolve(&self, out: &mut Emitter) -> Result<Vec<usize>, CliError> {
        let grid = match (&self.grid, self.n) {
            (Some(g), _) => g.clone(),
            (None, Some(n)) => geometric_grid(n),
            (None, None) => return Err(CliError::Malformed("either --n or --grid is required".into())),
        };
        if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Malformed("grid must be positive and strictly increasing".into()));
        }
        out.grid(&grid);
        Ok(grid)
    }
}

fn reseed(spec: &mut WeightSpec, seed: u64) -> bool {
    match spec {
        WeightSpec::BernoulliPm1 { seed: s } => {
            *s = seed;
            true
        }
        WeightSpec::ResidueMasked { base, .. } => reseed(base, seed),
        _ => false,
    }
}

/// Parses a weight spec. Randomized kinds take their seed from `--seed`,
/// which is then mandatory; a seed written in the JSON is replaced.
pub fn weight_spec(out: &mut Emitter, arg: &str, seed: Option<u64>) -> Result<WeightSpec, CliError> {
    let spec: WeightSpec = out.parse(arg)?;
    seeded(out, spec, seed)
}

pub fn seeded(out: &mut Emitter, mut spec: WeightSpec, seed: Option<u64>) -> Result<WeightSpec, CliError> {
    if reseed(&mut spec, seed.unwrap_or(0)) {
        let seed = seed.ok_or_else(|| CliError::Malformed("randomized weights require --seed".into()))?;
        out.seed(seed);
    }
    Ok(spec)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointConfig {
    EventuallyPeriodic {
        #[serde(default)]
        preamble: Word,
        period: Word,
        #[serde(default)]
        sidedness: Sidedness,
    },
    /// Block `k` is `blocks[choices_k]`.
    BlockStream { choices: Box<PointConfig>, blocks: Vec<Word> },
    Shifted { inner: Box<PointConfig>, by: i64 },
    /// Coordinates in `[0, 1)`.
    Torus { coords: Vec<f64> },
}

impl PointConfig {
    fn symbolic(&self) -> Result<PointSpec, CliError> {
        Ok(match self {
            PointConfig::EventuallyPeriodic { preamble, period, sidedness } => {
                PointSpec::eventually_periodic(preamble.clone(), period.clone(), *sidedness)?
            }
            PointConfig::BlockStream { choices, blocks } => PointSpec::block_stream(choices.symbolic()?, blocks.clone())?,
            PointConfig::Shifted { inner, by } => inner.symbolic()?.shifted(*by)?,
            PointConfig::Torus { .. } => return Err(CliError::Malformed("torus points cannot be nested".into())),
        })
    }

    pub fn build(&self) -> Result<Point, CliError> {
        match self {
            PointConfig::Torus { coords } => Ok(Point::Torus(coords.clone())),
            _ => Ok(Point::Symbolic(self.symbolic()?)),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemConfig {
    FullShift {
        #[serde(default = "two")]
        symbols: u8,
    },
    CodedSubshift {
        generators: Vec<Word>,
        #[serde(default)]
        sidedness: Sidedness,
    },
    ToralAffine(ToralAffineMap),
    CircleRotation { alpha: f64 },
}

fn two() -> u8 {
    2
}

impl SystemConfig {
    pub fn build(self) -> Result<SystemHandle, CliError> {
        Ok(match self {
            SystemConfig::FullShift { symbols } => SystemHandle::FullShift { symbols },
            SystemConfig::CodedSubshift { generators, sidedness } => {
                SystemHandle::CodedSubshift { horseshoe: CodedHorseshoe::new(generators, sidedness)? }
            }
            SystemConfig::ToralAffine(map) => SystemHandle::ToralAffine(map.validated()?),
            SystemConfig::CircleRotation { alpha } => SystemHandle::CircleRotation { alpha },
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub observable: Observable,
    pub point: PointConfig,
    pub weight: WeightSpec,
}

/// A toral map file: `{"matrix": .., "translation": [..]}` or a bare matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MapConfig {
    Map(ToralAffineMap),
    Bare(IntMatrix),
}

impl MapConfig {
    pub fn build(self) -> Result<ToralAffineMap, CliError> {
        Ok(match self {
            MapConfig::Map(map) => map.validated()?,
            MapConfig::Bare(m) => ToralAffineMap::linear(m)?,
        })
    }
}
