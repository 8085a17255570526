use rand::Rng;

use super::{RngStream, Step};
use crate::error::{Error, Result};
use crate::features::BOYAN_MAX_STATE;

/// State of the Boyan chain; state 0 is terminal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoyanState(pub usize);

impl BoyanState {
    pub const START: BoyanState = BoyanState(BOYAN_MAX_STATE);

    pub fn is_terminal(self) -> bool {
        self.0 == 0
    }
}

/// One transition: from `s > 2` move to `s-1` or `s-2` with equal
/// probability and reward -3; `2 -> 1` pays -2; `1 -> 0` pays 0 and ends
/// the episode.
pub fn boyan_step(s: BoyanState, rng: &mut RngStream) -> Result<Step<BoyanState>> {
    let next = match s.0 {
        0 => return Err(Error::contract("step from terminal Boyan state")),
        n if n > BOYAN_MAX_STATE => {
            return Err(Error::contract(format!("Boyan state {n} out of range")))
        }
        1 => (0, 0.0),
        2 => (1, -2.0),
        n => {
            if rng.random_bool(0.5) {
                (n - 1, -3.0)
            } else {
                (n - 2, -3.0)
            }
        }
    };
    Ok(Step {
        state: BoyanState(next.0),
        reward: next.1,
        terminal: next.0 == 0,
    })
}

/// Exact undiscounted value under the chain's dynamics: every state above 1
/// costs 2 per state traversed, in expectation.
pub fn boyan_true_value(s: BoyanState) -> f64 {
    match s.0 {
        0 => 0.0,
        n => -2.0 * (n as f64 - 1.0),
    }
}

/// Stateful episode driver.
#[derive(Clone, Debug)]
pub struct BoyanChain {
    state: BoyanState,
}

impl Default for BoyanChain {
    fn default() -> Self {
        BoyanChain {
            state: BoyanState::START,
        }
    }
}

impl BoyanChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.state = BoyanState::START;
    }

    pub fn state(&self) -> BoyanState {
        self.state
    }

    pub fn step(&mut self, rng: &mut RngStream) -> Result<Step<BoyanState>> {
        let step = boyan_step(self.state, rng)?;
        self.state = step.state;
        Ok(step)
    }
}
