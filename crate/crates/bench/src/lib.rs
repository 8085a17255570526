//! Fixtures shared by the criterion benchmarks.

use linear_dyna::envs::RngStream;
use linear_dyna::harness::{boyan_episode, Trajectory, TraceHash};
use linear_dyna::{DynaAgent, PlannerConfig, PlanningMethod, SparseVec, TileCoder, TileCoderConfig};
use rand::Rng;

pub const BOYAN_DIM: usize = 25;

pub fn boyan_trajectories(seed: u64, episodes: usize) -> Vec<Trajectory> {
    let mut rng = RngStream::new(seed);
    let mut hash = TraceHash::new();
    (0..episodes)
        .map(|_| boyan_episode(&mut rng, &mut hash).expect("boyan episode"))
        .collect()
}

/// A Dyna-MG agent that has learned its model from `episodes` Boyan
/// episodes with planning switched off.
pub fn learned_boyan_agent(seed: u64, episodes: usize) -> DynaAgent {
    let cfg = PlannerConfig {
        planning_steps: 0,
        ..PlannerConfig::default()
    };
    let mut agent = DynaAgent::new(PlanningMethod::Mg, cfg, BOYAN_DIM, seed).expect("valid config");
    agent.set_step_size(0.05).expect("positive step size");
    let terminal = SparseVec::zeros(BOYAN_DIM);
    for traj in boyan_trajectories(seed, episodes) {
        for (phi, r, next) in traj.transitions() {
            agent.observe(phi, r, next.unwrap_or(&terminal)).expect("stable learning");
        }
    }
    agent
}

/// Feature vectors of uniformly drawn Mountain Car states.
pub fn mcar_features(seed: u64, count: usize) -> (TileCoder, Vec<SparseVec>) {
    let coder = TileCoder::new(TileCoderConfig::default()).expect("default tile coder");
    let mut rng = RngStream::new(seed);
    let features = (0..count)
        .map(|_| coder.encode(rng.random_range(-1.2..0.5), rng.random_range(-0.07..0.07)))
        .collect();
    (coder, features)
}
