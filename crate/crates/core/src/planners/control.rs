use rand::Rng;

use super::{check_step_size, td0_update, PlannerConfig, SweepQueue, Theta};
use crate::envs::RngStream;
use crate::error::{check_dim, Error, Result};
use crate::features::SparseVec;
use crate::model::ActionModelSet;

/// An episodic environment seen through its feature vectors.
pub trait ControlTask {
    fn num_actions(&self) -> usize;

    /// Features of the current state.
    fn features(&self) -> &SparseVec;

    /// Applies `action` and returns `(reward, terminal)`.
    fn step(&mut self, action: usize) -> Result<(f64, bool)>;
}

/// `argmax_a [b_a^T phi + gamma theta^T F_a phi]`, lowest index on ties.
pub fn greedy_action(theta: &[f64], models: &ActionModelSet, phi: &SparseVec, gamma: f64) -> Result<usize> {
    if models.num_actions() == 0 {
        return Err(Error::contract("greedy action over an empty action set"));
    }
    check_dim(models.dim(), theta.len())?;
    check_dim(models.dim(), phi.dim())?;
    let mut best = (0, f64::NEG_INFINITY);
    for (a, m) in models.iter().enumerate() {
        let value = m.reward_of(phi)
            + gamma
                * phi
                    .entries()
                    .iter()
                    .map(|&(j, pj)| pj * m.column_dot(j, theta))
                    .sum::<f64>();
        if value > best.1 {
            best = (a, value);
        }
    }
    Ok(best.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlStep {
    pub action: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// Linear Dyna control with per-action models and MG prioritized sweeping.
/// With zero planning steps this is the baseline the planner is compared
/// against: the same action selection, real-step and model updates, and no
/// planning.
#[derive(Clone, Debug)]
pub struct ControlAgent {
    config: PlannerConfig,
    theta: Theta,
    models: ActionModelSet,
    queue: SweepQueue,
    rng: RngStream,
    alpha: f64,
    scratch: Vec<usize>,
}

impl ControlAgent {
    pub fn new(config: PlannerConfig, num_actions: usize, n: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(ControlAgent {
            config,
            theta: Theta::zeros(n),
            models: ActionModelSet::new(num_actions, n)?,
            queue: SweepQueue::new(n),
            rng: RngStream::new(seed),
            alpha: 0.0,
            scratch: Vec::new(),
        })
    }

    /// Starts from the given action models instead of zero models.
    pub fn with_models(config: PlannerConfig, models: ActionModelSet, seed: u64) -> Result<Self> {
        let n = models.dim();
        Ok(ControlAgent {
            models,
            ..ControlAgent::new(config, 1, n, seed)?
        })
    }

    pub fn set_step_size(&mut self, alpha: f64) -> Result<()> {
        check_step_size(alpha)?;
        self.alpha = alpha;
        Ok(())
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    pub fn models(&self) -> &ActionModelSet {
        &self.models
    }

    pub fn queue(&self) -> &SweepQueue {
        &self.queue
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    /// Epsilon-greedy choice. Always consumes one uniform draw, plus one
    /// more when exploring.
    pub fn choose_action(&mut self, phi: &SparseVec) -> Result<usize> {
        if self.rng.random::<f64>() < self.config.epsilon {
            Ok(self.rng.random_range(0..self.models.num_actions()))
        } else {
            greedy_action(&self.theta, &self.models, phi, self.config.gamma)
        }
    }

    /// One loop body: act, learn from the real transition, plan.
    pub fn step<T: ControlTask + ?Sized>(&mut self, task: &mut T) -> Result<ControlStep> {
        check_dim(self.models.num_actions(), task.num_actions())?;
        let phi = task.features().clone();
        let action = self.choose_action(&phi)?;
        let (reward, terminal) = task.step(action)?;
        let next = if terminal {
            SparseVec::zeros(phi.dim())
        } else {
            task.features().clone()
        };
        self.learn(&phi, action, reward, &next)?;
        Ok(ControlStep {
            action,
            reward,
            terminal,
        })
    }

    /// Real-step TD(0), update of the taken action's model, MG queue
    /// seeding and up to `p` planning pops. Returns the TD error.
    pub fn learn(&mut self, phi: &SparseVec, action: usize, reward: f64, next: &SparseVec) -> Result<f64> {
        if action >= self.models.num_actions() {
            return Err(Error::contract(format!("invalid action {action}")));
        }
        let gamma = self.config.gamma;
        let delta = td0_update(&mut self.theta, phi, reward, next, gamma, self.alpha)?;
        self.models.get_mut(action).update(phi, reward, next, self.alpha)?;
        let p = self.config.planning_steps;
        if p > 0 {
            for &(i, pi) in phi.entries() {
                self.queue.push(i, (delta * pi).abs())?;
            }
            self.plan(p)?;
        }
        Ok(delta)
    }

    /// `max_a [b_a(j) + gamma theta^T F_a e_j] - theta(j)`.
    pub fn backup_error(&self, j: usize) -> f64 {
        let gamma = self.config.gamma;
        let best = self
            .models
            .iter()
            .map(|m| m.reward_weights()[j] + gamma * m.column_dot(j, &self.theta))
            .fold(f64::NEG_INFINITY, f64::max);
        best - self.theta[j]
    }

    /// Up to `k` pops; each backs up every `j` with `F_a[i][j] != 0` for
    /// some action. Returns the number of pops made.
    pub fn plan(&mut self, k: usize) -> Result<usize> {
        let mut preds = std::mem::take(&mut self.scratch);
        let mut done = 0;
        while done < k {
            let Some((i, _)) = self.queue.pop() else {
                break;
            };
            preds.clear();
            for m in self.models.iter() {
                preds.extend(m.row_nonzeros(i).iter().map(|&(j, _)| j));
            }
            preds.sort_unstable();
            preds.dedup();
            for &j in &preds {
                let delta = self.backup_error(j);
                self.theta.add_at(j, self.alpha * delta)?;
                self.queue.push(j, delta.abs())?;
            }
            done += 1;
        }
        self.scratch = preds;
        Ok(done)
    }
}
