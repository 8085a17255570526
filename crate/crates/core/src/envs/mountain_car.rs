use rand::Rng;

use super::{RngStream, Step};
use crate::error::{Error, Result};

pub const POSITION_MIN: f64 = -1.2;
pub const POSITION_MAX: f64 = 0.5;
pub const VELOCITY_MIN: f64 = -0.07;
pub const VELOCITY_MAX: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
pub const NUM_ACTIONS: usize = 3;
pub const DEFAULT_STEP_CAP: usize = 10_000;

const THROTTLE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

/// Probability that the evaluation policy's action is replaced by a
/// uniformly random one.
pub const EVAL_NOISE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCarState {
    pub position: f64,
    pub velocity: f64,
}

impl MCarState {
    pub const START: MCarState = MCarState {
        position: -0.5,
        velocity: 0.0,
    };

    pub fn is_terminal(&self) -> bool {
        self.position >= GOAL_POSITION
    }

    pub fn in_bounds(&self) -> bool {
        (POSITION_MIN..=POSITION_MAX).contains(&self.position)
            && (VELOCITY_MIN..=VELOCITY_MAX).contains(&self.velocity)
    }
}

/// Actions: 0 = reverse, 1 = coast, 2 = forward.
pub fn mcar_step(s: MCarState, action: usize) -> Result<Step<MCarState>> {
    if s.is_terminal() {
        return Err(Error::contract("step from terminal Mountain Car state"));
    }
    if action >= NUM_ACTIONS {
        return Err(Error::contract(format!("invalid Mountain Car action {action}")));
    }
    let mut velocity = s.velocity + THROTTLE * (action as f64 - 1.0)
        - GRAVITY * (3.0 * s.position).cos();
    velocity = velocity.clamp(VELOCITY_MIN, VELOCITY_MAX);
    let position = (s.position + velocity).clamp(POSITION_MIN, POSITION_MAX);
    // Inelastic left wall.
    if position == POSITION_MIN && velocity < 0.0 {
        velocity = 0.0;
    }
    let state = MCarState { position, velocity };
    Ok(Step {
        state,
        reward: -1.0,
        terminal: state.is_terminal(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolicyChoice {
    pub action: usize,
    /// Whether the noise switch fired and the action was drawn uniformly.
    pub randomized: bool,
}

/// The fixed evaluation policy: accelerate in the direction of motion
/// (forward when stationary), with the action replaced by a uniformly random
/// one with probability `noise`.
#[derive(Clone, Copy, Debug)]
pub struct EvalPolicy {
    pub noise: f64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        EvalPolicy { noise: EVAL_NOISE }
    }
}

impl EvalPolicy {
    pub fn greedy_action(s: &MCarState) -> usize {
        if s.velocity < 0.0 {
            0
        } else {
            2
        }
    }

    pub fn choose(&self, s: &MCarState, rng: &mut RngStream) -> PolicyChoice {
        if rng.random::<f64>() < self.noise {
            PolicyChoice {
                action: rng.random_range(0..NUM_ACTIONS),
                randomized: true,
            }
        } else {
            PolicyChoice {
                action: Self::greedy_action(s),
                randomized: false,
            }
        }
    }
}

pub fn mcar_eval_policy(s: &MCarState, rng: &mut RngStream) -> usize {
    EvalPolicy::default().choose(s, rng).action
}

/// Episode driver with a step cap. Hitting the cap truncates the episode
/// without marking it terminal.
#[derive(Clone, Debug)]
pub struct MountainCar {
    state: MCarState,
    steps: usize,
    step_cap: usize,
}

impl Default for MountainCar {
    fn default() -> Self {
        MountainCar::new(DEFAULT_STEP_CAP)
    }
}

impl MountainCar {
    pub fn new(step_cap: usize) -> Self {
        MountainCar {
            state: MCarState::START,
            steps: 0,
            step_cap,
        }
    }

    pub fn reset(&mut self) {
        self.state = MCarState::START;
        self.steps = 0;
    }

    pub fn state(&self) -> MCarState {
        self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_cap(&self) -> usize {
        self.step_cap
    }

    pub fn truncated(&self) -> bool {
        !self.state.is_terminal() && self.steps >= self.step_cap
    }

    pub fn step(&mut self, action: usize) -> Result<Step<MCarState>> {
        if self.steps >= self.step_cap {
            return Err(Error::contract("Mountain Car episode already truncated"));
        }
        let step = mcar_step(self.state, action)?;
        self.state = step.state;
        self.steps += 1;
        Ok(step)
    }
}
