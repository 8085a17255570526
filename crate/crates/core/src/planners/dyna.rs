use std::fmt;
use std::str::FromStr;

use super::{check_step_size, td0_update, PlannerConfig, SweepQueue, Theta, UpdateRule};
use crate::envs::RngStream;
use crate::error::{check_dim, Error, Result};
use crate::features::SparseVec;
use crate::model::LinearModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlanningMethod {
    /// Model-free TD(0); no model is learned.
    Td0,
    /// Planning from unit basis vectors drawn from `mu`.
    Random,
    /// Prioritized sweeping that queues the predecessors of visited features.
    Pwma,
    /// Prioritized sweeping that queues the visited features themselves.
    Mg,
}

impl PlanningMethod {
    pub fn name(self) -> &'static str {
        match self {
            PlanningMethod::Td0 => "td0",
            PlanningMethod::Random => "dyna-random",
            PlanningMethod::Pwma => "dyna-pwma",
            PlanningMethod::Mg => "dyna-mg",
        }
    }
}

impl fmt::Display for PlanningMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlanningMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "td0" => Ok(PlanningMethod::Td0),
            "dyna-random" => Ok(PlanningMethod::Random),
            "dyna-pwma" => Ok(PlanningMethod::Pwma),
            "dyna-mg" => Ok(PlanningMethod::Mg),
            other => Err(Error::Config(format!("unknown planning method `{other}`"))),
        }
    }
}

/// Linear Dyna agent for policy evaluation.
///
/// [`DynaAgent::observe`] runs one loop body of the selected algorithm on a
/// real transition. The planning phases are also exposed on their own so a
/// fixed model can be planned against without any real experience.
#[derive(Clone, Debug)]
pub struct DynaAgent {
    method: PlanningMethod,
    config: PlannerConfig,
    theta: Theta,
    model: LinearModel,
    queue: SweepQueue,
    rng: RngStream,
    alpha: f64,
    learn_model: bool,
}

impl DynaAgent {
    pub fn new(method: PlanningMethod, config: PlannerConfig, n: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if config.update == UpdateRule::ResidualGradient
            && matches!(method, PlanningMethod::Pwma | PlanningMethod::Mg)
        {
            return Err(Error::Config(format!(
                "{method} plans with coordinate TD(0) backups; residual-gradient updates are not supported"
            )));
        }
        if let Some(len) = config.mu.support() {
            check_dim(n, len)?;
        }
        Ok(DynaAgent {
            method,
            config,
            theta: Theta::zeros(n),
            model: LinearModel::new(n),
            queue: SweepQueue::new(n),
            rng: RngStream::new(seed),
            alpha: 0.0,
            learn_model: method != PlanningMethod::Td0,
        })
    }

    /// Replaces the model. Learning stays enabled unless turned off with
    /// [`DynaAgent::set_model_learning`].
    pub fn with_model(mut self, model: LinearModel) -> Result<Self> {
        check_dim(self.dim(), model.dim())?;
        self.model = model;
        Ok(self)
    }

    pub fn set_model_learning(&mut self, on: bool) {
        self.learn_model = on;
    }

    pub fn set_step_size(&mut self, alpha: f64) -> Result<()> {
        check_step_size(alpha)?;
        self.alpha = alpha;
        Ok(())
    }

    pub fn set_theta(&mut self, theta: Theta) -> Result<()> {
        check_dim(self.dim(), theta.dim())?;
        self.theta = theta;
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    pub fn method(&self) -> PlanningMethod {
        self.method
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn queue(&self) -> &SweepQueue {
        &self.queue
    }

    /// One real step: TD(0) on the transition, a model update, then the
    /// planning phase of the selected method. Terminal transitions pass an
    /// all-zero `next`. Returns the real-step TD error.
    pub fn observe(&mut self, phi: &SparseVec, reward: f64, next: &SparseVec) -> Result<f64> {
        let gamma = self.config.gamma;
        let delta = td0_update(&mut self.theta, phi, reward, next, gamma, self.alpha)?;
        if self.learn_model {
            self.model.update(phi, reward, next, self.alpha)?;
        }
        let p = self.config.planning_steps;
        match self.method {
            PlanningMethod::Td0 => {}
            PlanningMethod::Random => self.plan_random(p)?,
            PlanningMethod::Pwma => {
                for &(i, pi) in phi.entries() {
                    for &(j, fij) in self.model.row_nonzeros(i) {
                        self.queue.push(j, (fij * delta * pi).abs())?;
                    }
                }
                self.plan_pwma(p)?;
            }
            PlanningMethod::Mg => {
                for &(i, pi) in phi.entries() {
                    self.queue.push(i, (delta * pi).abs())?;
                }
                self.plan_mg(p)?;
            }
        }
        Ok(delta)
    }

    /// TD error of the model backup from `e_j`:
    /// `b(j) + gamma theta^T F e_j - theta(j)`.
    pub fn basis_error(&self, j: usize) -> f64 {
        self.model.reward_weights()[j] + self.config.gamma * self.model.column_dot(j, &self.theta)
            - self.theta[j]
    }

    /// `||b + (gamma F^T - I) theta||_2`, the vector of all basis errors.
    pub fn planning_residual(&self) -> f64 {
        (0..self.dim())
            .map(|j| self.basis_error(j).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `k` planning updates from basis vectors drawn from `mu`, using the
    /// configured update rule.
    pub fn plan_random(&mut self, k: usize) -> Result<()> {
        let n = self.dim();
        for _ in 0..k {
            let j = self.config.mu.sample(n, &mut self.rng);
            self.random_update(j)?;
        }
        Ok(())
    }

    /// A single planning update from `e_j`. Returns the TD error.
    pub fn random_update(&mut self, j: usize) -> Result<f64> {
        let n = self.dim();
        if j >= n {
            return Err(Error::contract(format!("basis index {j} out of range")));
        }
        let gamma = self.config.gamma;
        match self.config.update {
            UpdateRule::Td0 => {
                let delta = self.basis_error(j);
                self.theta.add_at(j, self.alpha * delta)?;
                Ok(delta)
            }
            UpdateRule::ResidualGradient => {
                let phi = SparseVec::from_sorted_unchecked(n, vec![(j, 1.0)]);
                let next = self.model.column(j)?;
                let reward = self.model.reward_weights()[j];
                super::rg_update(&mut self.theta, &phi, reward, &next, gamma, self.alpha)
            }
        }
    }

    /// Up to `k` PWMA pops. Returns the number of pops made.
    pub fn plan_pwma(&mut self, k: usize) -> Result<usize> {
        for done in 0..k {
            let Some((i, _)) = self.queue.pop() else {
                return Ok(done);
            };
            let delta = self.basis_error(i);
            self.theta.add_at(i, self.alpha * delta)?;
            for &(j, fij) in self.model.row_nonzeros(i) {
                self.queue.push(j, (fij * delta).abs())?;
            }
        }
        Ok(k)
    }

    /// Up to `k` MG pops. Each pop backs up every predecessor of the popped
    /// feature. Returns the number of pops made.
    pub fn plan_mg(&mut self, k: usize) -> Result<usize> {
        for done in 0..k {
            let Some((i, _)) = self.queue.pop() else {
                return Ok(done);
            };
            self.mg_backup(i)?;
        }
        Ok(k)
    }

    fn mg_backup(&mut self, i: usize) -> Result<()> {
        for idx in 0..self.model.row_nonzeros(i).len() {
            let j = self.model.row_nonzeros(i)[idx].0;
            let delta = self.basis_error(j);
            self.theta.add_at(j, self.alpha * delta)?;
            self.queue.push(j, delta.abs())?;
        }
        Ok(())
    }

    /// Queues every feature at its current basis error and runs MG pops
    /// until the queue is empty or `max_pops` is reached. Returns the
    /// number of pops.
    pub fn plan_to_exhaustion(&mut self, max_pops: usize) -> Result<usize> {
        for j in 0..self.dim() {
            let e = self.basis_error(j).abs();
            self.queue.push(j, e)?;
        }
        let mut pops = 0;
        while pops < max_pops {
            let Some((i, _)) = self.queue.pop() else {
                break;
            };
            self.mg_backup(i)?;
            pops += 1;
        }
        Ok(pops)
    }

    pub(crate) fn restore_queue(&mut self, entries: &[(usize, f64)]) -> Result<()> {
        self.queue.clear();
        for &(i, p) in entries {
            self.queue.push(i, p)?;
        }
        Ok(())
    }
}
