//! Run configuration: a TOML file sets every knob; command-line flags
//! override the file one-to-one. Unknown keys are rejected so typos
//! fail loudly instead of silently running defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use courtrank::dataset::IngestConfig;
use courtrank::prob::FitConfig;
use courtrank::ranking::{PageRankConfig, WeightParams};
use courtrank::search::SearchGrid;
use courtrank::{Error, Result};

fn config_err(message: impl Into<String>) -> Error {
    Error::InvalidParameter {
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorChoice {
    Official,
    Uniform,
    Parametric,
}

impl std::str::FromStr for PredictorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "official" => Ok(PredictorChoice::Official),
            "uniform" => Ok(PredictorChoice::Uniform),
            "parametric" => Ok(PredictorChoice::Parametric),
            other => Err(config_err(format!(
                "unknown predictor {other:?} (expected official, uniform, or parametric)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSection {
    pub kind: PredictorChoice,
    #[serde(default = "default_uniform_age")]
    pub uniform_age_years: u32,
    #[serde(default)]
    pub params: WeightParams,
}

fn default_uniform_age() -> u32 {
    1
}

impl Default for PredictorSection {
    fn default() -> Self {
        PredictorSection {
            kind: PredictorChoice::Parametric,
            uniform_age_years: 1,
            params: WeightParams::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default)]
    pub grid: SearchGrid,
    /// First-attempt vector: the per-parameter individual bests.
    #[serde(default = "default_search_init")]
    pub init: WeightParams,
    #[serde(default = "default_per_year")]
    pub per_year: usize,
}

fn default_search_init() -> WeightParams {
    WeightParams::new(5, 5.0, 0.5, 1.3)
}

fn default_per_year() -> usize {
    10
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            grid: SearchGrid::default(),
            init: default_search_init(),
            per_year: 10,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbSection {
    #[serde(default = "default_leaf_threshold")]
    pub leaf_threshold: usize,
    #[serde(default)]
    pub fit: FitConfig,
}

fn default_leaf_threshold() -> usize {
    200
}

impl Default for ProbSection {
    fn default() -> Self {
        ProbSection {
            leaf_threshold: 200,
            fit: FitConfig::default(),
        }
    }
}

/// The whole run configuration.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Store directory (read by every command except ingest, written by
    /// ingest).
    pub store: Option<PathBuf>,
    /// Output directory for report and export files.
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub year_start: Option<i32>,
    pub year_end: Option<i32>,
    #[serde(default)]
    pub predictor: Option<PredictorSection>,
    #[serde(default)]
    pub pagerank: Option<PageRankConfig>,
    #[serde(default)]
    pub search: Option<SearchSection>,
    #[serde(default)]
    pub prob: Option<ProbSection>,
    pub raw_dir: Option<PathBuf>,
    #[serde(default)]
    pub ingest: Option<IngestConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        toml::from_str(&content).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn store_dir(&self) -> PathBuf {
        self.store
            .clone()
            .unwrap_or_else(|| PathBuf::from("out/store"))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn seed_value(&self) -> u64 {
        self.seed.unwrap_or(42)
    }

    pub fn years(&self) -> Result<Vec<i32>> {
        match (self.year_start, self.year_end) {
            (Some(a), Some(b)) if a <= b => Ok((a..=b).collect()),
            (Some(_), Some(_)) => Err(config_err("year_start must be <= year_end")),
            _ => Err(config_err(
                "evaluation years not set (year_start/year_end in config, or --years A-B)",
            )),
        }
    }

    pub fn predictor_section(&self) -> PredictorSection {
        self.predictor.clone().unwrap_or_default()
    }

    pub fn pagerank_config(&self) -> PageRankConfig {
        self.pagerank.unwrap_or_default()
    }

    pub fn search_section(&self) -> SearchSection {
        self.search.clone().unwrap_or_default()
    }

    pub fn prob_section(&self) -> ProbSection {
        self.prob.clone().unwrap_or_default()
    }

    pub fn ingest_config(&self) -> IngestConfig {
        self.ingest
            .clone()
            .map(|c| c.merged_over_defaults())
            .unwrap_or_default()
    }
}

/// Parse a `--years 2005-2013` (or single `2007`) span.
pub fn parse_year_span(raw: &str) -> Result<(i32, i32)> {
    let parse_one = |s: &str| -> Result<i32> {
        s.trim()
            .parse()
            .map_err(|_| config_err(format!("bad year {s:?} in --years")))
    };
    match raw.split_once('-') {
        Some((a, b)) => {
            let (a, b) = (parse_one(a)?, parse_one(b)?);
            if a > b {
                return Err(config_err("--years start must be <= end"));
            }
            Ok((a, b))
        }
        None => {
            let y = parse_one(raw)?;
            Ok((y, y))
        }
    }
}

/// Parse `--params age=4,decay=5,surface=0.3,round=1.7`. Only the keys
/// given are overridden.
pub fn apply_params_overrides(base: WeightParams, raw: &str) -> Result<WeightParams> {
    let mut params = base;
    let mut seen: HashMap<&str, f64> = HashMap::new();
    for pair in raw.split(',') {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| config_err(format!("bad --params entry {pair:?} (want key=value)")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| config_err(format!("bad --params value {value:?}")))?;
        seen.insert(key.trim(), value);
    }
    for (key, value) in seen {
        match key {
            "age" => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(config_err("age must be a positive integer"));
                }
                params.age_years = value as u32;
            }
            "decay" => params.decay_lambda = value,
            "surface" => params.surface_factor = value,
            "round" => params.round_base = value,
            other => {
                return Err(config_err(format!(
                    "unknown --params key {other:?} (expected age, decay, surface, round)"
                )))
            }
        }
    }
    params.validate()?;
    Ok(params)
}
