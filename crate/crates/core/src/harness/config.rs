//! Experiment configuration and presets.
//!
//! Config files are flat `key = value` lines; `#` starts a comment. Lists
//! are comma separated, ranges are `lo:hi`, weight pairs `s_n:s_r`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sampler::{Schedule, Solver};
use crate::{Error, Result};

/// Which pipeline an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// Nonlinearity model; reports bent frequency per coupler strength.
    Bent,
    /// Nonlinearity model followed by hill-climbing harvests.
    LocalSearch,
    /// Balancedness-only model on the clique embedding.
    Balanced,
    /// Nonlinearity plus resiliency on the composite embedding.
    Resilient,
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bent" => Ok(Pipeline::Bent),
            "local-search" | "localsearch" => Ok(Pipeline::LocalSearch),
            "balanced" => Ok(Pipeline::Balanced),
            "resilient" => Ok(Pipeline::Resilient),
            other => Err(Error::Config(format!("unknown pipeline '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingScheme {
    /// Sample the logical model directly.
    None,
    Bipartite,
    Clique,
    Composite,
}

impl FromStr for EmbeddingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "logical" => Ok(EmbeddingScheme::None),
            "bipartite" => Ok(EmbeddingScheme::Bipartite),
            "clique" => Ok(EmbeddingScheme::Clique),
            "composite" => Ok(EmbeddingScheme::Composite),
            other => Err(Error::Config(format!("unknown embedding scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairKind {
    Majority,
    Expand,
}

impl FromStr for RepairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(RepairKind::Majority),
            "expand" => Ok(RepairKind::Expand),
            other => Err(Error::Config(format!("unknown repair method '{other}'"))),
        }
    }
}

pub const PRESETS: [&str; 6] = [
    "exp-bent-n2",
    "exp-bent-n4-sweep",
    "exp-bent-n6-localsearch",
    "exp-localsearch-n4",
    "exp-balanced-n4",
    "exp-resilient-n4",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub pipeline: Pipeline,
    pub n: usize,
    pub nonlinearity_strength: f64,
    pub resiliency_strength: f64,
    pub resiliency_order: usize,
    pub balancedness: bool,
    pub chain_strength: f64,
    pub coupler_strengths: Vec<f64>,
    pub weight_grid: Vec<(f64, f64)>,
    pub embedding: EmbeddingScheme,
    pub solver: Solver,
    pub reads: usize,
    pub sweeps: usize,
    pub seed: u64,
    pub nl_ranges: Vec<(u32, u32)>,
    pub top_k: Vec<usize>,
    pub repair: RepairKind,
    pub expand_cap: usize,
    pub repetitions: usize,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    fn base(experiment: &str, pipeline: Pipeline, n: usize, embedding: EmbeddingScheme) -> Self {
        let schedule = Schedule::default();
        Self {
            experiment: experiment.to_string(),
            pipeline,
            n,
            nonlinearity_strength: 0.05,
            resiliency_strength: 0.125,
            resiliency_order: 1,
            balancedness: true,
            chain_strength: -1.0,
            coupler_strengths: vec![],
            weight_grid: vec![],
            embedding,
            solver: Solver::Sa,
            reads: schedule.reads,
            sweeps: schedule.sweeps,
            seed: 42,
            nl_ranges: vec![],
            top_k: vec![],
            repair: RepairKind::Majority,
            expand_cap: 16,
            repetitions: 10,
            output_dir: None,
        }
    }

    /// Named experiment with its published parameters.
    pub fn preset(name: &str) -> Result<Self> {
        use EmbeddingScheme::*;
        let cfg = match name {
            "exp-bent-n2" => Self { coupler_strengths: vec![1.0], ..Self::base(name, Pipeline::Bent, 2, Bipartite) },
            "exp-bent-n4-sweep" => Self {
                coupler_strengths: vec![2.0, 1.0, 0.5, 0.25, 0.1],
                ..Self::base(name, Pipeline::Bent, 4, Bipartite)
            },
            "exp-bent-n6-localsearch" => Self {
                coupler_strengths: vec![0.4],
                top_k: vec![50, 100, 200],
                nl_ranges: vec![(27, 28), (26, 27), (25, 27)],
                ..Self::base(name, Pipeline::LocalSearch, 6, Bipartite)
            },
            "exp-localsearch-n4" => Self {
                coupler_strengths: vec![1.0, 0.5, 0.25],
                top_k: vec![1000],
                nl_ranges: vec![(4, 6)],
                ..Self::base(name, Pipeline::LocalSearch, 4, Bipartite)
            },
            "exp-balanced-n4" => Self {
                coupler_strengths: vec![0.25, 0.1, 0.05],
                resiliency_order: 0,
                ..Self::base(name, Pipeline::Balanced, 4, Clique)
            },
            "exp-resilient-n4" => Self {
                weight_grid: vec![(0.25, 0.125), (0.5, 0.125), (0.125, 0.125), (0.05, 0.125)],
                ..Self::base(name, Pipeline::Resilient, 4, Composite)
            },
            other => return Err(Error::Config(format!("unknown preset '{other}' (known: {})", PRESETS.join(", ")))),
        };
        Ok(cfg)
    }

    pub fn schedule(&self) -> Schedule {
        Schedule { reads: self.reads, sweeps: self.sweeps, seed: self.seed, ..Schedule::default() }
    }

    /// Checks every parameter before any sampling happens.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        if self.reads == 0 || self.sweeps == 0 {
            return fail("reads and sweeps must be at least 1".into());
        }
        if self.chain_strength.is_nan() || self.chain_strength >= 0.0 {
            return fail(format!("chain_strength must be negative, got {}", self.chain_strength));
        }
        if self.n < 2 || self.n > 8 {
            return fail(format!("n = {} is outside 2..=8", self.n));
        }
        match self.pipeline {
            Pipeline::Bent | Pipeline::LocalSearch | Pipeline::Balanced => {
                if self.coupler_strengths.is_empty() {
                    return fail("coupler strength sweep is empty".into());
                }
                if let Some(s) = self.coupler_strengths.iter().find(|s| s.is_nan() || **s <= 0.0) {
                    return fail(format!("coupler strength {s} must be positive"));
                }
            }
            Pipeline::Resilient => {
                if self.weight_grid.is_empty() {
                    return fail("weight grid is empty".into());
                }
                if self.weight_grid.iter().any(|&(a, b)| !(a >= 0.0 && b > 0.0)) {
                    return fail("weight grid entries need s_n >= 0 and s_r > 0".into());
                }
            }
        }
        if matches!(self.pipeline, Pipeline::Bent | Pipeline::LocalSearch | Pipeline::Resilient) && !self.n.is_multiple_of(2) {
            return fail(format!("bent designs need even n, got {}", self.n));
        }
        if self.pipeline == Pipeline::LocalSearch {
            if self.top_k.is_empty() || self.nl_ranges.is_empty() {
                return fail("local search needs top_k and nl_ranges".into());
            }
            if self.top_k.contains(&0) {
                return fail("top_k entries must be at least 1".into());
            }
        }
        if self.pipeline != Pipeline::Bent && self.pipeline != Pipeline::LocalSearch && self.resiliency_order > self.n {
            return fail(format!("resiliency order {} exceeds n", self.resiliency_order));
        }
        if self.pipeline == Pipeline::Balanced && !self.balancedness && self.resiliency_order == 0 {
            return fail("balanced pipeline with no criterion".into());
        }
        if self.repair == RepairKind::Expand && self.expand_cap == 0 {
            return fail("expand_cap must be at least 1".into());
        }
        let scheme_ok = match self.embedding {
            EmbeddingScheme::None => true,
            EmbeddingScheme::Bipartite => self.pipeline != Pipeline::Balanced && self.pipeline != Pipeline::Resilient,
            EmbeddingScheme::Clique => self.pipeline == Pipeline::Balanced,
            EmbeddingScheme::Composite => self.pipeline == Pipeline::Resilient,
        };
        if !scheme_ok {
            return fail(format!("embedding {:?} cannot host the {:?} pipeline", self.embedding, self.pipeline));
        }
        if self.solver == Solver::Exact && self.embedding != EmbeddingScheme::None {
            return fail("the exact solver only runs on logical models".into());
        }
        self.schedule().validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} '{value}' for key '{key}'"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("number"));
        let int = |v: &str| v.trim().parse::<usize>().map_err(|_| bad("integer"));
        let list = |v: &str| -> Vec<String> {
            v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
        };
        let pair = |v: &str| -> Result<(String, String)> {
            let (a, b) = v.split_once(':').ok_or_else(|| bad("pair"))?;
            Ok((a.trim().to_string(), b.trim().to_string()))
        };
        match key {
            "experiment" => self.experiment = value.to_string(),
            "pipeline" => self.pipeline = value.parse()?,
            "n" => self.n = int(value)?,
            "nonlinearity_strength" => self.nonlinearity_strength = num(value)?,
            "resiliency_strength" => self.resiliency_strength = num(value)?,
            "resiliency_order" => self.resiliency_order = int(value)?,
            "balancedness" => self.balancedness = value.parse().map_err(|_| bad("boolean"))?,
            "chain_strength" => self.chain_strength = num(value)?,
            "coupler_strengths" => self.coupler_strengths = list(value).iter().map(|s| num(s)).collect::<Result<_>>()?,
            "weight_grid" => {
                self.weight_grid = list(value)
                    .iter()
                    .map(|s| {
                        let (a, b) = pair(s)?;
                        Ok((num(&a)?, num(&b)?))
                    })
                    .collect::<Result<_>>()?
            }
            "embedding" => self.embedding = value.parse()?,
            "solver" => self.solver = value.parse().map_err(|_| bad("solver"))?,
            "reads" => self.reads = int(value)?,
            "sweeps" => self.sweeps = int(value)?,
            "seed" => self.seed = value.trim().parse().map_err(|_| bad("seed"))?,
            "nl_ranges" => {
                self.nl_ranges = list(value)
                    .iter()
                    .map(|s| {
                        let (a, b) = pair(s)?;
                        Ok((int(&a)? as u32, int(&b)? as u32))
                    })
                    .collect::<Result<_>>()?
            }
            "top_k" => self.top_k = list(value).iter().map(|s| int(s)).collect::<Result<_>>()?,
            "repair" => self.repair = value.parse()?,
            "expand_cap" => self.expand_cap = int(value)?,
            "repetitions" => self.repetitions = int(value)?,
            "output_dir" => self.output_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a config file. An `experiment` naming a preset seeds the
    /// defaults; later keys override it.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        let name = entries.iter().find(|(k, _)| k == "experiment").map(|(_, v)| v.clone());
        let mut cfg = match name.as_deref() {
            Some(p) if PRESETS.contains(&p) => Self::preset(p)?,
            Some(other) => Self::base(other, Pipeline::Bent, 4, EmbeddingScheme::Bipartite),
            None => return Err(Error::Config("missing 'experiment' key".into())),
        };
        for (k, v) in &entries {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
            items.iter().map(f).collect::<Vec<_>>().join(",")
        }
        let mut s = String::new();
        let kv: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.clone()),
            ("pipeline", kebab(&self.pipeline)),
            ("n", self.n.to_string()),
            ("nonlinearity_strength", self.nonlinearity_strength.to_string()),
            ("resiliency_strength", self.resiliency_strength.to_string()),
            ("resiliency_order", self.resiliency_order.to_string()),
            ("balancedness", self.balancedness.to_string()),
            ("chain_strength", self.chain_strength.to_string()),
            ("coupler_strengths", join(&self.coupler_strengths, |v| v.to_string())),
            ("weight_grid", join(&self.weight_grid, |(a, b)| format!("{a}:{b}"))),
            ("embedding", kebab(&self.embedding)),
            ("solver", self.solver.to_string()),
            ("reads", self.reads.to_string()),
            ("sweeps", self.sweeps.to_string()),
            ("seed", self.seed.to_string()),
            ("nl_ranges", join(&self.nl_ranges, |(a, b)| format!("{a}:{b}"))),
            ("top_k", join(&self.top_k, |v| v.to_string())),
            ("repair", kebab(&self.repair)),
            ("expand_cap", self.expand_cap.to_string()),
            ("repetitions", self.repetitions.to_string()),
            ("output_dir", self.output_dir.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
        ];
        for (k, v) in kv {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn kebab<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}
