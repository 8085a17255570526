//! Flat `section.key = value` experiment configuration.
//!
//! ```text
//! # Boyan chain, Dyna-MG against TD(0)
//! env.name = boyan
//! alg.name = td0, dyna-mg
//! alg.p = 1
//! schedule.alpha0 = 0.01, 0.1, 1
//! schedule.n0 = 100, 1000, 1e6
//! run.episodes = 200
//! run.seeds = 30
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. Lists are comma separated and only allowed for `alg.name`,
//! `schedule.alpha0` and `schedule.n0`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::envs::mountain_car::DEFAULT_STEP_CAP;
use crate::error::{Error, Result};
use crate::features::TileCoderConfig;
use crate::planners::{PlanningMethod, UpdateRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvKind {
    Boyan,
    MountainCar,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Boyan => "boyan",
            EnvKind::MountainCar => "mountain-car",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Eval(PlanningMethod),
    /// Control with planning switched off.
    Sarsa,
    ControlMg,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Eval(m) => m.name(),
            Algorithm::Sarsa => "sarsa",
            Algorithm::ControlMg => "dyna-control-mg",
        }
    }

    pub fn is_control(self) -> bool {
        !matches!(self, Algorithm::Eval(_))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sarsa" => Ok(Algorithm::Sarsa),
            "dyna-control-mg" => Ok(Algorithm::ControlMg),
            other => other
                .parse()
                .map(Algorithm::Eval)
                .map_err(|_| Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuKind {
    Uniform,
    /// Mass on the lower half of the feature indices.
    Skew(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleMode {
    Decay,
    Constant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub step_cap: usize,
    pub algorithms: Vec<Algorithm>,
    pub planning_steps: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub mu: MuKind,
    pub update: UpdateRule,
    pub schedule: ScheduleMode,
    pub alpha0: Vec<f64>,
    pub n0: Vec<f64>,
    pub episodes: usize,
    pub seeds: usize,
    pub base_seed: u64,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub eval_seed: u64,
    pub tiles: TileCoderConfig,
    /// Model entries at or below this magnitude are dropped.
    pub drop_tolerance: f64,
}

/// One point of the (algorithm, alpha0, N0) grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub algorithm: Algorithm,
    pub alpha0: f64,
    pub n0: f64,
}

impl Cell {
    /// File-name stem, e.g. `dyna-mg_a0.1_n1000`.
    pub fn label(&self) -> String {
        format!("{}_a{}_n{}", self.algorithm, self.alpha0, self.n0)
    }
}

const KEYS: &[&str] = &[
    "env.name",
    "env.step_cap",
    "alg.name",
    "alg.p",
    "alg.gamma",
    "alg.epsilon",
    "alg.mu",
    "alg.update",
    "schedule.mode",
    "schedule.alpha0",
    "schedule.n0",
    "run.episodes",
    "run.seeds",
    "run.base_seed",
    "eval.every",
    "eval.episodes",
    "eval.seed",
    "tiles.tilings",
    "tiles.grid",
    "tiles.size",
    "tiles.seed",
    "model.drop_tol",
];

const LIST_KEYS: &[&str] = &["alg.name", "schedule.alpha0", "schedule.n0"];

struct Entry {
    line: usize,
    value: String,
}

fn scalar<T: FromStr>(map: &BTreeMap<String, Entry>, key: &str, default: T) -> Result<T> {
    match map.get(key) {
        None => Ok(default),
        Some(e) => e
            .value
            .parse()
            .map_err(|_| Error::parse(e.line, format!("invalid value `{}` for `{key}`", e.value))),
    }
}

fn list<T: FromStr>(map: &BTreeMap<String, Entry>, key: &str) -> Result<Option<Vec<T>>> {
    let Some(e) = map.get(key) else {
        return Ok(None);
    };
    e.value
        .split(',')
        .map(|v| {
            let v = v.trim();
            v.parse()
                .map_err(|_| Error::parse(e.line, format!("invalid value `{v}` in `{key}`")))
        })
        .collect::<Result<Vec<T>>>()
        .map(Some)
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, Entry> = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::parse(line, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::parse(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(Error::parse(line, format!("empty value for `{key}`")));
            }
            if value.contains(',') && !LIST_KEYS.contains(&key) {
                return Err(Error::parse(line, format!("`{key}` takes a single value")));
            }
            if let Some(prev) = map.get(key) {
                return Err(Error::parse(
                    line,
                    format!("`{key}` already set on line {}", prev.line),
                ));
            }
            map.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }

        let env = match map.get("env.name").map(|e| (e.line, e.value.as_str())) {
            None => return Err(Error::Config("missing `env.name`".into())),
            Some((_, "boyan")) => EnvKind::Boyan,
            Some((_, "mountain-car")) => EnvKind::MountainCar,
            Some((line, other)) => {
                return Err(Error::parse(line, format!("unknown environment `{other}`")))
            }
        };
        let algorithms: Vec<Algorithm> = match map.get("alg.name") {
            None => return Err(Error::Config("missing `alg.name`".into())),
            Some(e) => e
                .value
                .split(',')
                .map(|v| v.trim().parse().map_err(|err: Error| Error::parse(e.line, err.to_string())))
                .collect::<Result<_>>()?,
        };
        let mu = match map.get("alg.mu").map(|e| (e.line, e.value.as_str())) {
            None | Some((_, "uniform")) => MuKind::Uniform,
            Some((_, "skew")) => MuKind::Skew(0.9),
            Some((line, other)) => return Err(Error::parse(line, format!("unknown `alg.mu` `{other}`"))),
        };
        let update = match map.get("alg.update").map(|e| (e.line, e.value.as_str())) {
            None | Some((_, "td0")) => UpdateRule::Td0,
            Some((_, "rg")) => UpdateRule::ResidualGradient,
            Some((line, other)) => {
                return Err(Error::parse(line, format!("unknown `alg.update` `{other}`")))
            }
        };
        let schedule = match map.get("schedule.mode").map(|e| (e.line, e.value.as_str())) {
            None | Some((_, "decay")) => ScheduleMode::Decay,
            Some((_, "constant")) => ScheduleMode::Constant,
            Some((line, other)) => {
                return Err(Error::parse(line, format!("unknown `schedule.mode` `{other}`")))
            }
        };
        let defaults = TileCoderConfig::default();
        let cfg = ExperimentConfig {
            env,
            step_cap: scalar(&map, "env.step_cap", DEFAULT_STEP_CAP)?,
            algorithms,
            planning_steps: scalar(&map, "alg.p", 1)?,
            gamma: scalar(&map, "alg.gamma", 1.0)?,
            epsilon: scalar(&map, "alg.epsilon", 0.1)?,
            mu,
            update,
            schedule,
            alpha0: list(&map, "schedule.alpha0")?.unwrap_or(vec![0.1]),
            n0: list(&map, "schedule.n0")?.unwrap_or(vec![1000.0]),
            episodes: scalar(&map, "run.episodes", 200)?,
            seeds: scalar(&map, "run.seeds", 30)?,
            base_seed: scalar(&map, "run.base_seed", 0)?,
            eval_every: scalar(
                &map,
                "eval.every",
                if env == EnvKind::Boyan { 1 } else { 5 },
            )?,
            eval_episodes: scalar(&map, "eval.episodes", 2000)?,
            eval_seed: scalar(&map, "eval.seed", 7_777)?,
            tiles: TileCoderConfig {
                tilings: scalar(&map, "tiles.tilings", defaults.tilings)?,
                grid: scalar(&map, "tiles.grid", defaults.grid)?,
                size: scalar(&map, "tiles.size", defaults.size)?,
                seed: scalar(&map, "tiles.seed", defaults.seed)?,
            },
            drop_tolerance: scalar(&map, "model.drop_tol", crate::model::DEFAULT_DROP_TOLERANCE)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.algorithms.is_empty() {
            return bad("no algorithm selected".into());
        }
        if !(self.drop_tolerance >= 0.0 && self.drop_tolerance.is_finite()) {
            return bad("model.drop_tol must be finite and non-negative".into());
        }
        let control = self.algorithms.iter().filter(|a| a.is_control()).count();
        if control > 0 && self.env != EnvKind::MountainCar {
            return bad("control algorithms require env.name = mountain-car".into());
        }
        if control > 0 && control != self.algorithms.len() {
            return bad("cannot mix control and policy-evaluation algorithms in one config".into());
        }
        if (1..self.algorithms.len()).any(|k| self.algorithms[..k].contains(&self.algorithms[k])) {
            return bad("duplicate algorithm in `alg.name`".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("alg.gamma {} outside [0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("alg.epsilon {} outside [0, 1]", self.epsilon));
        }
        if self.alpha0.is_empty() || self.n0.is_empty() {
            return bad("empty schedule grid".into());
        }
        for &a in &self.alpha0 {
            let ok = match self.schedule {
                ScheduleMode::Decay => a > 0.0 && a.is_finite(),
                ScheduleMode::Constant => a >= 0.0 && a.is_finite(),
            };
            if !ok {
                return bad(format!("invalid schedule.alpha0 {a}"));
            }
        }
        if self.n0.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
            return bad("schedule.n0 values must be positive".into());
        }
        if self.episodes == 0 || self.seeds == 0 {
            return bad("run.episodes and run.seeds must be positive".into());
        }
        if self.eval_every == 0 {
            return bad("eval.every must be positive".into());
        }
        if self.env == EnvKind::MountainCar && self.step_cap == 0 {
            return bad("env.step_cap must be positive".into());
        }
        if self.env == EnvKind::MountainCar
            && self.eval_episodes == 0
            && self.algorithms.iter().any(|a| !a.is_control())
        {
            return bad("eval.episodes must be positive for Mountain Car policy evaluation".into());
        }
        if let MuKind::Skew(_) = self.mu {
            if self.dim() < 2 {
                return bad("skewed sampling needs at least two features".into());
            }
        }
        if self.update == UpdateRule::ResidualGradient
            && self
                .algorithms
                .iter()
                .any(|a| !matches!(a, Algorithm::Eval(PlanningMethod::Random | PlanningMethod::Td0)))
        {
            return bad("alg.update = rg is only supported for dyna-random".into());
        }
        Ok(())
    }

    /// Feature dimension of the configured environment.
    pub fn dim(&self) -> usize {
        match self.env {
            EnvKind::Boyan => crate::features::BOYAN_FEATURES,
            EnvKind::MountainCar => self.tiles.size,
        }
    }

    pub fn is_control(&self) -> bool {
        self.algorithms.iter().any(|a| a.is_control())
    }

    pub fn is_grid(&self) -> bool {
        self.alpha0.len() > 1 || self.n0.len() > 1
    }

    /// Every (algorithm, alpha0, N0) combination in declaration order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            for &alpha0 in &self.alpha0 {
                for &n0 in &self.n0 {
                    out.push(Cell {
                        algorithm,
                        alpha0,
                        n0,
                    });
                }
            }
        }
        out
    }

    /// Normalised `key = value` text of every setting, defaults included.
    pub fn canonical(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mu = match self.mu {
            MuKind::Uniform => "uniform".to_string(),
            MuKind::Skew(_) => "skew".to_string(),
        };
        let lines = [
            format!("env.name = {}", self.env.name()),
            format!("env.step_cap = {}", self.step_cap),
            format!(
                "alg.name = {}",
                self.algorithms.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
            ),
            format!("alg.p = {}", self.planning_steps),
            format!("alg.gamma = {}", self.gamma),
            format!("alg.epsilon = {}", self.epsilon),
            format!("alg.mu = {mu}"),
            format!("alg.update = {}", self.update.name()),
            format!(
                "schedule.mode = {}",
                match self.schedule {
                    ScheduleMode::Decay => "decay",
                    ScheduleMode::Constant => "constant",
                }
            ),
            format!("schedule.alpha0 = {}", join(&self.alpha0)),
            format!("schedule.n0 = {}", join(&self.n0)),
            format!("run.episodes = {}", self.episodes),
            format!("run.seeds = {}", self.seeds),
            format!("run.base_seed = {}", self.base_seed),
            format!("eval.every = {}", self.eval_every),
            format!("eval.episodes = {}", self.eval_episodes),
            format!("eval.seed = {}", self.eval_seed),
            format!("tiles.tilings = {}", self.tiles.tilings),
            format!("tiles.grid = {}", self.tiles.grid),
            format!("tiles.size = {}", self.tiles.size),
            format!("tiles.seed = {}", self.tiles.seed),
            format!("model.drop_tol = {}", self.drop_tolerance),
        ];
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    pub fn hash(&self) -> u64 {
        super::fnv1a(self.canonical().as_bytes())
    }
}
