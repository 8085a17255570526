//! Planner checkpoints in the same line-oriented text format as model
//! snapshots. The model itself is stored separately and referenced by
//! name. The random stream is not captured.

use std::io::{BufRead, Write};

use super::{DynaAgent, PlanningMethod, Theta};
use crate::error::{Error, Result};
use crate::model::{parse_field, LinearModel};

const HEADER: &str = "linear-dyna planner v1";

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerSnapshot {
    pub method: PlanningMethod,
    pub alpha: f64,
    pub theta: Vec<f64>,
    pub queue: Vec<(usize, f64)>,
    pub model_ref: String,
}

impl DynaAgent {
    pub fn snapshot(&self, model_ref: &str) -> PlannerSnapshot {
        PlannerSnapshot {
            method: self.method(),
            alpha: self.step_size(),
            theta: self.theta().to_vec(),
            queue: self.queue().entries(),
            model_ref: model_ref.to_string(),
        }
    }

    /// Rebuilds an agent from a snapshot and its model. The random stream
    /// starts fresh from `seed`.
    pub fn restore(
        snapshot: &PlannerSnapshot,
        config: super::PlannerConfig,
        model: LinearModel,
        seed: u64,
    ) -> Result<Self> {
        let n = snapshot.theta.len();
        let mut agent = DynaAgent::new(snapshot.method, config, n, seed)?.with_model(model)?;
        agent.set_theta(Theta::from(snapshot.theta.clone()))?;
        agent.set_step_size(snapshot.alpha)?;
        agent.restore_queue(&snapshot.queue)?;
        Ok(agent)
    }
}

impl PlannerSnapshot {
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        if self.model_ref.is_empty() || self.model_ref.contains(char::is_whitespace) {
            return Err(Error::contract("model reference must be a non-empty token"));
        }
        writeln!(out, "{HEADER}")?;
        writeln!(out, "method {}", self.method)?;
        writeln!(out, "n {}", self.theta.len())?;
        writeln!(out, "alpha {:e}", self.alpha)?;
        writeln!(out, "model {}", self.model_ref)?;
        let nonzero: Vec<_> = self.theta.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
        writeln!(out, "theta {}", nonzero.len())?;
        for (i, v) in nonzero {
            writeln!(out, "{i} {v:e}")?;
        }
        writeln!(out, "queue {}", self.queue.len())?;
        for (i, p) in &self.queue {
            writeln!(out, "{i} {p:e}")?;
        }
        Ok(())
    }
}

struct Cursor<R> {
    lines: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Cursor<R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.lines.next() {
            Some(l) => Ok(l?),
            None => Err(Error::parse(self.line, "unexpected end of planner snapshot")),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let line = self.next()?;
        match line.split_once(' ') {
            Some((found, rest)) if found == key => Ok(rest.to_string()),
            _ => Err(Error::parse(self.line, format!("expected `{key} ...`"))),
        }
    }

    fn pairs(&mut self, key: &str, n: usize) -> Result<Vec<(usize, f64)>> {
        let count: usize = parse_field(self.line + 1, &self.keyed(key)?)?;
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(count.min(n));
        for _ in 0..count {
            let line = self.next()?;
            let k = self.line;
            let mut fields = line.split_whitespace();
            let (Some(i), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::parse(k, "expected `index value`"));
            };
            let i: usize = parse_field(k, i)?;
            let v: f64 = parse_field(k, v)?;
            if i >= n || !v.is_finite() || out.last().is_some_and(|&(p, _)| p >= i) {
                return Err(Error::parse(k, "index out of range, unsorted, or non-finite value"));
            }
            out.push((i, v));
        }
        Ok(out)
    }
}

pub fn read_planner_snapshot<R: BufRead>(input: R) -> Result<PlannerSnapshot> {
    let mut c = Cursor {
        lines: input.lines(),
        line: 0,
    };
    if c.next()? != HEADER {
        return Err(Error::parse(1, format!("expected `{HEADER}`")));
    }
    let method: PlanningMethod = c
        .keyed("method")?
        .parse()
        .map_err(|_| Error::parse(2, "unknown method"))?;
    let n: usize = parse_field(3, &c.keyed("n")?)?;
    let alpha: f64 = parse_field(4, &c.keyed("alpha")?)?;
    let model_ref = c.keyed("model")?;
    let theta_pairs = c.pairs("theta", n)?;
    let queue = c.pairs("queue", n)?;
    if let Some(Ok(extra)) = c.lines.next() {
        if !extra.trim().is_empty() {
            return Err(Error::parse(c.line + 1, "trailing data after planner snapshot"));
        }
    }
    let mut theta = vec![0.0; n];
    for (i, v) in theta_pairs {
        theta[i] = v;
    }
    Ok(PlannerSnapshot {
        method,
        alpha,
        theta,
        queue,
        model_ref,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::unit_basis;
    use crate::planners::PlannerConfig;

    fn trained_agent() -> DynaAgent {
        let cfg = PlannerConfig {
            planning_steps: 0,
            ..PlannerConfig::default()
        };
        let mut a = DynaAgent::new(PlanningMethod::Mg, cfg, 4, 1).unwrap();
        a.set_step_size(0.3).unwrap();
        for k in 0..6 {
            let phi = unit_basis(k % 4, 4).unwrap();
            let next = unit_basis((k + 1) % 4, 4).unwrap();
            a.observe(&phi, -1.0 - 0.1 * k as f64, &next).unwrap();
        }
        a
    }

    #[test]
    fn round_trip_restores_theta_queue_and_model() {
        let agent = trained_agent();
        assert!(!agent.queue().is_empty());
        let snap = agent.snapshot("model.txt");
        let mut text = Vec::new();
        snap.write(&mut text).unwrap();
        let back = read_planner_snapshot(&text[..]).unwrap();
        assert_eq!(back, snap);

        let mut model_text = Vec::new();
        agent.model().write_snapshot(&mut model_text).unwrap();
        let model = LinearModel::read_snapshot(&model_text[..]).unwrap();
        let restored = DynaAgent::restore(&back, agent.config().clone(), model, 1).unwrap();
        assert_eq!(restored.theta(), agent.theta());
        assert_eq!(restored.queue().entries(), agent.queue().entries());
        assert_eq!(restored.model(), agent.model());

        // Deterministic planning from the restored state matches the original.
        let mut a = agent.clone();
        let mut b = restored;
        a.plan_mg(10).unwrap();
        b.plan_mg(10).unwrap();
        assert_eq!(a.theta(), b.theta());
    }

    #[test]
    fn rejects_malformed_snapshots() {
        let mut text = Vec::new();
        trained_agent().snapshot("m").write(&mut text).unwrap();
        let good = String::from_utf8(text).unwrap();
        assert!(read_planner_snapshot(good.as_bytes()).is_ok());
        for bad in [
            good.replace("planner v1", "planner v2"),
            good.replace("dyna-mg", "dyna-xx"),
            good.replace("theta ", "beta "),
            format!("{good}9 9\n"),
            good.lines().take(6).collect::<Vec<_>>().join("\n"),
        ] {
            assert!(read_planner_snapshot(bad.as_bytes()).is_err(), "{bad}");
        }
        let snap = PlannerSnapshot {
            method: PlanningMethod::Td0,
            alpha: 0.1,
            theta: vec![0.0],
            queue: vec![],
            model_ref: "two words".into(),
        };
        assert!(snap.write(Vec::new()).is_err());
    }
}
