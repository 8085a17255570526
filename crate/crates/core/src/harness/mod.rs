//! Experiment orchestration: configuration, the step-size schedule,
//! seeded multi-run execution, aggregation and CSV output.

mod config;
mod curve;
mod runner;
mod schedule;

pub use config::{Algorithm, Cell, EnvKind, ExperimentConfig, MuKind, ScheduleMode};
pub use curve::{
    aggregate, emit_csv, emit_runs_csv, format_g12, parse_csv, AggregatePoint, AggregatedCurve,
    LearningCurve, CSV_HEADER,
};
pub use runner::{
    boyan_episode, mcar_eval_dataset, mcar_eval_episode, run_control, run_experiment,
    run_policy_eval, select_best, CellResult, Experiment, RunReport, Trajectory,
};
pub use schedule::{step_size, Schedule};

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = TraceHash::new();
    h.write(bytes);
    h.finish()
}

/// Incremental FNV-1a used to fingerprint trajectories and configs.
#[derive(Clone, Debug)]
pub struct TraceHash(u64);

impl Default for TraceHash {
    fn default() -> Self {
        Self::new()
    }
}

impl TraceHash {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Self {
        TraceHash(Self::OFFSET)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}
