//! Benchmark environments: the generalized Boyan chain and Mountain Car.

pub mod boyan;
pub mod mountain_car;
mod rng;

pub use boyan::{boyan_step, boyan_true_value, BoyanChain, BoyanState};
pub use mountain_car::{mcar_eval_policy, mcar_step, EvalPolicy, MCarState, MountainCar, PolicyChoice};
pub use rng::{derive_seed, RngStream};

/// Outcome of one environment transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step<S> {
    pub state: S,
    pub reward: f64,
    pub terminal: bool,
}
