//! Value-function updates and the Dyna planners built on them.

mod control;
mod dyna;
mod queue;
mod snapshot;

use std::ops::{Deref, Index};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::envs::RngStream;
use crate::error::{check_dim, Error, Result};
use crate::features::SparseVec;

pub use control::{greedy_action, ControlAgent, ControlStep, ControlTask};
pub use dyna::{DynaAgent, PlanningMethod};
pub use queue::{SweepQueue, PRIORITY_THRESHOLD};
pub use snapshot::{read_planner_snapshot, PlannerSnapshot};

/// `||theta||_2` above which a run is declared diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

const DIVERGENCE_NORM_SQ: f64 = DIVERGENCE_NORM * DIVERGENCE_NORM;
const RESYNC_INTERVAL: u64 = 1 << 16;

/// Dense parameter vector with a divergence guard.
///
/// Every write goes through [`Theta::add_at`] or [`Theta::add_scaled`], which
/// keep a running sum of squares and fail with [`Error::Diverged`] once an
/// entry stops being finite or the norm exceeds [`DIVERGENCE_NORM`]. The
/// error carries the number of updates applied so far.
#[derive(Clone, Debug)]
pub struct Theta {
    values: Vec<f64>,
    sum_sq: f64,
    updates: u64,
}

impl PartialEq for Theta {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl Theta {
    pub fn zeros(n: usize) -> Self {
        Theta {
            values: vec![0.0; n],
            sum_sq: 0.0,
            updates: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Number of write operations applied since construction.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn add_at(&mut self, i: usize, delta: f64) -> Result<()> {
        if i >= self.values.len() {
            return Err(Error::contract(format!(
                "index {i} out of range for theta of dimension {}",
                self.values.len()
            )));
        }
        let old = self.values[i];
        let new = old + delta;
        self.values[i] = new;
        self.sum_sq += new * new - old * old;
        self.finish_update(new.is_finite())
    }

    /// `theta += scale * v`.
    pub fn add_scaled(&mut self, v: &SparseVec, scale: f64) -> Result<()> {
        check_dim(self.values.len(), v.dim())?;
        let mut finite = true;
        for &(i, x) in v.entries() {
            let old = self.values[i];
            let new = old + scale * x;
            self.values[i] = new;
            self.sum_sq += new * new - old * old;
            finite &= new.is_finite();
        }
        self.finish_update(finite)
    }

    fn finish_update(&mut self, finite: bool) -> Result<()> {
        self.updates += 1;
        if self.updates.is_multiple_of(RESYNC_INTERVAL) || self.sum_sq > DIVERGENCE_NORM_SQ {
            self.sum_sq = self.values.iter().map(|v| v * v).sum();
        }
        if !finite || self.sum_sq.is_nan() || self.sum_sq > DIVERGENCE_NORM_SQ {
            return Err(Error::Diverged { step: self.updates });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for Theta {
    fn from(values: Vec<f64>) -> Self {
        let sum_sq = values.iter().map(|v| v * v).sum();
        Theta {
            values,
            sum_sq,
            updates: 0,
        }
    }
}

impl Deref for Theta {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl Index<usize> for Theta {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

fn td_error(theta: &Theta, phi: &SparseVec, reward: f64, next: &SparseVec, gamma: f64) -> Result<f64> {
    check_dim(theta.dim(), phi.dim())?;
    check_dim(theta.dim(), next.dim())?;
    Ok(reward + gamma * next.dot_dense(theta) - phi.dot_dense(theta))
}

/// Linear TD(0): `theta += alpha delta phi`. Returns `delta`.
pub fn td0_update(
    theta: &mut Theta,
    phi: &SparseVec,
    reward: f64,
    next: &SparseVec,
    gamma: f64,
    alpha: f64,
) -> Result<f64> {
    let delta = td_error(theta, phi, reward, next, gamma)?;
    theta.add_scaled(phi, alpha * delta)?;
    Ok(delta)
}

/// Residual gradient: `theta += alpha delta (phi - gamma phi')`. Returns
/// `delta`.
pub fn rg_update(
    theta: &mut Theta,
    phi: &SparseVec,
    reward: f64,
    next: &SparseVec,
    gamma: f64,
    alpha: f64,
) -> Result<f64> {
    let delta = td_error(theta, phi, reward, next, gamma)?;
    theta.add_scaled(phi, alpha * delta)?;
    theta.add_scaled(next, -alpha * gamma * delta)?;
    Ok(delta)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateRule {
    #[default]
    Td0,
    ResidualGradient,
}

impl UpdateRule {
    pub fn apply(
        self,
        theta: &mut Theta,
        phi: &SparseVec,
        reward: f64,
        next: &SparseVec,
        gamma: f64,
        alpha: f64,
    ) -> Result<f64> {
        match self {
            UpdateRule::Td0 => td0_update(theta, phi, reward, next, gamma, alpha),
            UpdateRule::ResidualGradient => rg_update(theta, phi, reward, next, gamma, alpha),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UpdateRule::Td0 => "td0",
            UpdateRule::ResidualGradient => "rg",
        }
    }
}

/// Distribution over basis indices for random-sample planning.
#[derive(Clone, Debug, Default)]
pub enum SampleDistribution {
    #[default]
    Uniform,
    Weighted { dist: WeightedIndex<f64>, len: usize },
}

impl SampleDistribution {
    pub fn weighted(weights: &[f64]) -> Result<Self> {
        WeightedIndex::new(weights)
            .map(|dist| SampleDistribution::Weighted {
                dist,
                len: weights.len(),
            })
            .map_err(|e| Error::contract(format!("invalid sampling weights: {e}")))
    }

    /// Puts mass `heavy` uniformly on the lower half of the indices
    /// (rounded up) and the rest uniformly on the upper half.
    pub fn skewed(n: usize, heavy: f64) -> Result<Self> {
        if n < 2 || !(0.0..=1.0).contains(&heavy) {
            return Err(Error::contract("skewed sampling needs n >= 2 and mass in [0, 1]"));
        }
        let low = n.div_ceil(2);
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                if i < low {
                    heavy / low as f64
                } else {
                    (1.0 - heavy) / (n - low) as f64
                }
            })
            .collect();
        Self::weighted(&weights)
    }

    pub fn sample(&self, n: usize, rng: &mut RngStream) -> usize {
        match self {
            SampleDistribution::Uniform => rng.random_range(0..n),
            SampleDistribution::Weighted { dist, .. } => dist.sample(rng),
        }
    }

    /// Number of indices the distribution covers, if it is fixed.
    pub fn support(&self) -> Option<usize> {
        match self {
            SampleDistribution::Uniform => None,
            SampleDistribution::Weighted { len, .. } => Some(*len),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub gamma: f64,
    /// Planning steps (or queue pops) per real step.
    pub planning_steps: usize,
    pub mu: SampleDistribution,
    pub epsilon: f64,
    pub update: UpdateRule,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            gamma: 1.0,
            planning_steps: 1,
            mu: SampleDistribution::Uniform,
            epsilon: 0.1,
            update: UpdateRule::Td0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        Ok(())
    }
}

fn check_step_size(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::contract(format!("invalid step size {alpha}")))
    }
}
