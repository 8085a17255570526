use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Algorithm, Cell, EnvKind, ExperimentConfig, MuKind};
use super::curve::{aggregate, emit_csv, emit_runs_csv, AggregatedCurve, LearningCurve};
use super::schedule::Schedule;
use super::TraceHash;
use crate::analysis::{rmse_vs_true, td_fixed_loss_replay};
use crate::envs::{derive_seed, BoyanChain, EvalPolicy, MountainCar, RngStream};
use crate::envs::mountain_car::NUM_ACTIONS;
use crate::error::{Error, Result};
use crate::features::{boyan_features, SparseVec, TileCoder};
use crate::model::{ActionModelSet, LinearModel};
use crate::planners::{
    ControlAgent, ControlTask, DynaAgent, PlannerConfig, SampleDistribution,
};

const ENV_STREAM: u64 = 0;
const AGENT_STREAM: u64 = 1;

/// One recorded episode. `features` has one entry per visited non-terminal
/// state, so a terminal episode has as many feature vectors as rewards and
/// a truncated one has one extra (the state it stopped in).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub features: Vec<SparseVec>,
    pub rewards: Vec<f64>,
    pub terminal: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// `(phi, r, phi')` with `None` marking the terminal transition.
    pub fn transitions(&self) -> impl Iterator<Item = (&SparseVec, f64, Option<&SparseVec>)> + '_ {
        self.rewards
            .iter()
            .enumerate()
            .map(|(t, &r)| (&self.features[t], r, self.features.get(t + 1)))
    }
}

pub fn boyan_episode(rng: &mut RngStream, hash: &mut TraceHash) -> Result<Trajectory> {
    let mut env = BoyanChain::new();
    let mut traj = Trajectory::default();
    loop {
        let s = env.state();
        hash.write_u64(s.0 as u64);
        traj.features.push(boyan_features(s.0)?);
        let step = env.step(rng)?;
        traj.rewards.push(step.reward);
        if step.terminal {
            hash.write_u64(step.state.0 as u64);
            traj.terminal = true;
            return Ok(traj);
        }
    }
}

/// An episode of the fixed evaluation policy, truncated at `step_cap`.
pub fn mcar_eval_episode(
    coder: &TileCoder,
    step_cap: usize,
    rng: &mut RngStream,
    hash: &mut TraceHash,
) -> Result<Trajectory> {
    let policy = EvalPolicy::default();
    let mut env = MountainCar::new(step_cap);
    let mut traj = Trajectory::default();
    loop {
        let s = env.state();
        hash.write_f64(s.position);
        hash.write_f64(s.velocity);
        traj.features.push(coder.encode(s.position, s.velocity));
        if env.truncated() {
            return Ok(traj);
        }
        let step = env.step(policy.choose(&s, rng).action)?;
        traj.rewards.push(step.reward);
        if step.terminal {
            traj.terminal = true;
            return Ok(traj);
        }
    }
}

/// The frozen dataset behind the Mountain Car loss.
pub fn mcar_eval_dataset(coder: &TileCoder, step_cap: usize, episodes: usize, seed: u64) -> Result<Vec<Trajectory>> {
    let mut rng = RngStream::new(seed);
    let mut hash = TraceHash::new();
    (0..episodes)
        .map(|_| mcar_eval_episode(coder, step_cap, &mut rng, &mut hash))
        .collect()
}

struct McarTask<'a> {
    env: MountainCar,
    coder: &'a TileCoder,
    features: SparseVec,
    hash: &'a mut TraceHash,
}

impl ControlTask for McarTask<'_> {
    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn features(&self) -> &SparseVec {
        &self.features
    }

    fn step(&mut self, action: usize) -> Result<(f64, bool)> {
        let step = self.env.step(action)?;
        self.hash.write_u64(action as u64);
        self.hash.write_f64(step.state.position);
        self.hash.write_f64(step.state.velocity);
        self.features = self.coder.encode(step.state.position, step.state.velocity);
        Ok((step.reward, step.terminal))
    }
}

/// Shared, read-only context for every trial of one configuration.
pub struct Experiment {
    cfg: ExperimentConfig,
    coder: Option<TileCoder>,
    eval_set: Vec<Trajectory>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let coder = match cfg.env {
            EnvKind::Boyan => None,
            EnvKind::MountainCar => Some(TileCoder::new(cfg.tiles)?),
        };
        let eval_set = match &coder {
            Some(c) if !cfg.is_control() => {
                mcar_eval_dataset(c, cfg.step_cap, cfg.eval_episodes, cfg.eval_seed)?
            }
            _ => Vec::new(),
        };
        Ok(Experiment {
            cfg,
            coder,
            eval_set,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn eval_set(&self) -> &[Trajectory] {
        &self.eval_set
    }

    /// `(environment seed, agent seed)` for a trial.
    pub fn trial_seeds(&self, trial: usize) -> (u64, u64) {
        let base = self.cfg.base_seed;
        (
            derive_seed(base, &[trial as u64, ENV_STREAM]),
            derive_seed(base, &[trial as u64, AGENT_STREAM]),
        )
    }

    /// Loss of a value function: RMSE against the true Boyan values, or the
    /// TD-fixed-point loss on the frozen Mountain Car dataset.
    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        match self.cfg.env {
            EnvKind::Boyan => rmse_vs_true(theta),
            EnvKind::MountainCar => Ok(td_fixed_loss_replay(
                self.eval_set.iter().flat_map(|t| t.transitions()),
                theta,
                self.cfg.gamma,
            )),
        }
    }

    fn planner_config(&self, algorithm: Algorithm) -> Result<PlannerConfig> {
        let mu = match self.cfg.mu {
            MuKind::Uniform => SampleDistribution::Uniform,
            MuKind::Skew(mass) => SampleDistribution::skewed(self.cfg.dim(), mass)?,
        };
        Ok(PlannerConfig {
            gamma: self.cfg.gamma,
            planning_steps: if algorithm == Algorithm::Sarsa {
                0
            } else {
                self.cfg.planning_steps
            },
            mu,
            epsilon: self.cfg.epsilon,
            update: self.cfg.update,
        })
    }

    fn schedule(&self, cell: &Cell) -> Schedule {
        Schedule {
            mode: self.cfg.schedule,
            alpha0: cell.alpha0,
            n0: cell.n0,
        }
    }

    fn curve(&self, cell: &Cell, trial: usize, seed: u64) -> LearningCurve {
        LearningCurve {
            algorithm: cell.algorithm.name().to_string(),
            trial,
            seed,
            config_hash: self.cfg.hash(),
            trajectory_hash: 0,
            points: Vec::new(),
            diverged_at: None,
        }
    }

    /// Generates the trial's trajectory stream once and runs every
    /// policy-evaluation cell on it.
    pub fn run_eval_trial(&self, trial: usize, cells: &[Cell]) -> Result<Vec<LearningCurve>> {
        let (env_seed, agent_seed) = self.trial_seeds(trial);
        let mut rng = RngStream::new(env_seed);
        let mut hash = TraceHash::new();
        let episodes: Vec<Trajectory> = (0..self.cfg.episodes)
            .map(|_| match (&self.coder, self.cfg.env) {
                (Some(c), EnvKind::MountainCar) => mcar_eval_episode(c, self.cfg.step_cap, &mut rng, &mut hash),
                _ => boyan_episode(&mut rng, &mut hash),
            })
            .collect::<Result<_>>()?;
        let trajectory_hash = hash.finish();
        let n = self.cfg.dim();
        let terminal_next = SparseVec::zeros(n);

        cells
            .iter()
            .map(|cell| {
                let Algorithm::Eval(method) = cell.algorithm else {
                    return Err(Error::contract("control cell in a policy-evaluation trial"));
                };
                let mut curve = self.curve(cell, trial, env_seed);
                curve.trajectory_hash = trajectory_hash;
                let mut agent = DynaAgent::new(method, self.planner_config(cell.algorithm)?, n, agent_seed)?
                    .with_model(LinearModel::with_drop_tolerance(n, self.cfg.drop_tolerance)?)?;
                let schedule = self.schedule(cell);
                'episodes: for (k, traj) in episodes.iter().enumerate() {
                    let episode = k + 1;
                    agent.set_step_size(schedule.at(episode as u64))?;
                    for (phi, r, next) in traj.transitions() {
                        match agent.observe(phi, r, next.unwrap_or(&terminal_next)) {
                            Ok(_) => {}
                            Err(Error::Diverged { step }) => {
                                curve.diverged_at = Some(step);
                                break 'episodes;
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    if episode % self.cfg.eval_every == 0 {
                        curve.points.push((episode, self.loss(agent.theta())?));
                    }
                }
                Ok(curve)
            })
            .collect()
    }

    /// Episodes of control; the curve holds steps per episode, with
    /// truncated episodes recorded at the step cap.
    pub fn run_control_trial(&self, trial: usize, cell: &Cell) -> Result<LearningCurve> {
        let coder = self
            .coder
            .as_ref()
            .ok_or_else(|| Error::contract("control needs the Mountain Car tile coder"))?;
        let (_, agent_seed) = self.trial_seeds(trial);
        let mut curve = self.curve(cell, trial, agent_seed);
        let model = LinearModel::with_drop_tolerance(self.cfg.dim(), self.cfg.drop_tolerance)?;
        let models = ActionModelSet::from_models(vec![model; NUM_ACTIONS])?;
        let mut agent = ControlAgent::with_models(self.planner_config(cell.algorithm)?, models, agent_seed)?;
        let schedule = self.schedule(cell);
        let mut hash = TraceHash::new();
        for episode in 1..=self.cfg.episodes {
            agent.set_step_size(schedule.at(episode as u64))?;
            let env = MountainCar::new(self.cfg.step_cap);
            let start = env.state();
            let mut task = McarTask {
                env,
                coder,
                features: coder.encode(start.position, start.velocity),
                hash: &mut hash,
            };
            loop {
                match agent.step(&mut task) {
                    Ok(s) if s.terminal || task.env.truncated() => break,
                    Ok(_) => {}
                    Err(Error::Diverged { step }) => {
                        curve.diverged_at = Some(step);
                        curve.trajectory_hash = hash.finish();
                        return Ok(curve);
                    }
                    Err(e) => return Err(e),
                }
            }
            curve.points.push((episode, task.env.steps() as f64));
        }
        curve.trajectory_hash = hash.finish();
        Ok(curve)
    }

    /// Runs every trial of every cell. The result is indexed by cell, and
    /// each entry lists curves in trial order regardless of scheduling.
    pub fn run_cells(&self, cells: &[Cell], jobs: Option<usize>) -> Result<Vec<Vec<LearningCurve>>> {
        let seeds = self.cfg.seeds;
        let work = || -> Result<Vec<Vec<LearningCurve>>> {
            if self.cfg.is_control() {
                let flat: Vec<LearningCurve> = (0..cells.len() * seeds)
                    .into_par_iter()
                    .map(|k| self.run_control_trial(k % seeds, &cells[k / seeds]))
                    .collect::<Result<_>>()?;
                Ok(flat.chunks(seeds).map(|c| c.to_vec()).collect())
            } else {
                let per_trial: Vec<Vec<LearningCurve>> = (0..seeds)
                    .into_par_iter()
                    .map(|trial| self.run_eval_trial(trial, cells))
                    .collect::<Result<_>>()?;
                Ok((0..cells.len())
                    .map(|c| per_trial.iter().map(|t| t[c].clone()).collect())
                    .collect())
            }
        };
        match jobs {
            None => work(),
            Some(j) => rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {j} worker threads: {e}")))?
                .install(work),
        }
    }
}

fn first_cells(cfg: &ExperimentConfig, control: bool) -> Result<Vec<Cell>> {
    if cfg.is_control() != control {
        return Err(Error::Config(if control {
            "run_control needs a control algorithm".into()
        } else {
            "run_policy_eval needs policy-evaluation algorithms".into()
        }));
    }
    Ok(cfg
        .algorithms
        .iter()
        .map(|&algorithm| Cell {
            algorithm,
            alpha0: cfg.alpha0[0],
            n0: cfg.n0[0],
        })
        .collect())
}

/// Policy-evaluation curves for every configured algorithm (first grid
/// point), grouped by algorithm then trial.
pub fn run_policy_eval(cfg: &ExperimentConfig) -> Result<Vec<LearningCurve>> {
    let cells = first_cells(cfg, false)?;
    Ok(Experiment::new(cfg.clone())?
        .run_cells(&cells, None)?
        .into_iter()
        .flatten()
        .collect())
}

/// Control curves (steps per episode) for every configured algorithm.
pub fn run_control(cfg: &ExperimentConfig) -> Result<Vec<LearningCurve>> {
    let cells = first_cells(cfg, true)?;
    Ok(Experiment::new(cfg.clone())?
        .run_cells(&cells, None)?
        .into_iter()
        .flatten()
        .collect())
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: Cell,
    pub label: String,
    pub curves: Vec<LearningCurve>,
    pub aggregate: AggregatedCurve,
}

impl CellResult {
    pub fn any_diverged(&self) -> bool {
        self.curves.iter().any(LearningCurve::diverged)
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub cells: Vec<CellResult>,
    /// Index into `cells` of the selected grid point for each algorithm.
    pub best: Vec<(Algorithm, usize)>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn any_diverged(&self) -> bool {
        self.cells.iter().any(CellResult::any_diverged)
    }
}

/// For each algorithm, the cell with the lowest final mean among cells
/// with at least one aggregated point. Ties keep the earlier cell.
pub fn select_best(results: &[CellResult], algorithms: &[Algorithm]) -> Vec<(Algorithm, usize)> {
    algorithms
        .iter()
        .filter_map(|&alg| {
            let mut best: Option<(usize, f64)> = None;
            for (k, r) in results.iter().enumerate() {
                if r.cell.algorithm != alg {
                    continue;
                }
                if let Some(p) = r.aggregate.final_point() {
                    if best.is_none_or(|(_, m)| p.mean < m) {
                        best = Some((k, p.mean));
                    }
                }
            }
            best.map(|(k, _)| (alg, k))
        })
        .collect()
}

/// Runs all cells of `cfg`, aggregates, and writes per-cell outputs into
/// `out`. A single-point grid names files after the algorithm; a sweep
/// names them after the cell and adds a summary and `<alg>_best.csv`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<RunReport> {
    let exp = Experiment::new(cfg.clone())?;
    let cells = cfg.cells();
    let all = exp.run_cells(&cells, jobs)?;
    let sweep = cfg.is_grid();
    let mut results = Vec::with_capacity(cells.len());
    for (cell, curves) in cells.iter().zip(all) {
        let aggregate = aggregate(&curves)?;
        results.push(CellResult {
            cell: *cell,
            label: if sweep {
                cell.label()
            } else {
                cell.algorithm.name().to_string()
            },
            curves,
            aggregate,
        });
    }
    let best = select_best(&results, &cfg.algorithms);

    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    for r in &results {
        files.extend(write_cell(out, &r.label, r, &exp)?);
    }
    if sweep {
        let path = out.join("sweep_summary.csv");
        let mut text = String::from("algorithm,alpha0,n0,final_episode,final_mean,final_stderr,n_runs,n_diverged,selected\n");
        for (k, r) in results.iter().enumerate() {
            let selected = best.iter().any(|&(_, b)| b == k);
            let (ep, mean, se) = r.aggregate.final_point().map_or(
                (String::new(), String::new(), String::new()),
                |p| (p.episode.to_string(), super::format_g12(p.mean), super::format_g12(p.stderr)),
            );
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.cell.algorithm,
                r.cell.alpha0,
                r.cell.n0,
                ep,
                mean,
                se,
                r.aggregate.n_runs,
                r.aggregate.n_diverged,
                u8::from(selected)
            ));
        }
        fs::write(&path, text)?;
        files.push(path);
        for &(alg, k) in &best {
            let path = out.join(format!("{alg}_best.csv"));
            emit_csv(&results[k].aggregate, BufWriter::new(fs::File::create(&path)?))?;
            files.push(path);
        }
    }
    Ok(RunReport {
        cells: results,
        best,
        files,
    })
}

fn write_cell(out: &Path, label: &str, r: &CellResult, exp: &Experiment) -> Result<Vec<PathBuf>> {
    let csv = out.join(format!("{label}.csv"));
    emit_csv(&r.aggregate, BufWriter::new(fs::File::create(&csv)?))?;
    let runs = out.join(format!("{label}_runs.csv"));
    emit_runs_csv(&r.curves, BufWriter::new(fs::File::create(&runs)?))?;

    let cfg = exp.config();
    let mut meta = String::new();
    meta.push_str(&format!("algorithm = {}\n", r.cell.algorithm));
    meta.push_str(&format!("alpha0 = {}\nn0 = {}\n", r.cell.alpha0, r.cell.n0));
    meta.push_str(&format!("config_hash = {:016x}\n", cfg.hash()));
    meta.push_str(&format!("rng = {}\n", RngStream::ALGORITHM));
    meta.push_str(&format!(
        "measure = {}\n",
        match (cfg.env, r.cell.algorithm.is_control()) {
            (_, true) => "steps_per_episode",
            (EnvKind::Boyan, false) => "rmse_vs_true",
            (EnvKind::MountainCar, false) => "td_fixed_loss",
        }
    ));
    if cfg.env == EnvKind::MountainCar && !cfg.is_control() {
        let transitions: usize = exp.eval_set().iter().map(Trajectory::len).sum();
        meta.push_str(&format!(
            "eval_dataset = {} episodes, {} transitions, seed {}\n",
            exp.eval_set().len(),
            transitions,
            cfg.eval_seed
        ));
    }
    meta.push_str(&format!(
        "runs = {}\ndiverged = {}\n",
        r.curves.len(),
        r.curves.iter().filter(|c| c.diverged()).count()
    ));
    for c in &r.curves {
        meta.push_str(&format!(
            "trial {} seed {} trajectory {:016x}{}\n",
            c.trial,
            c.seed,
            c.trajectory_hash,
            c.diverged_at.map_or(String::new(), |s| format!(" diverged_at {s}"))
        ));
    }
    meta.push_str("\n[config]\n");
    meta.push_str(&cfg.canonical());
    let meta_path = out.join(format!("{label}.meta"));
    fs::write(&meta_path, meta)?;
    Ok(vec![csv, runs, meta_path])
}
