use std::io::Write;

use crate::error::{Error, Result};

/// Loss (or steps-to-goal) measured over one run.
#[derive(Clone, Debug, PartialEq)]
pub struct LearningCurve {
    pub algorithm: String,
    pub trial: usize,
    pub seed: u64,
    pub config_hash: u64,
    /// Hash of the raw environment trajectory the run observed.
    pub trajectory_hash: u64,
    /// `(episode, value)` with strictly increasing episodes.
    pub points: Vec<(usize, f64)>,
    /// Update count at which the divergence guard fired, if it did. The
    /// points stop at the last evaluation before that.
    pub diverged_at: Option<u64>,
}

impl LearningCurve {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn final_value(&self) -> Option<f64> {
        self.points.last().map(|&(_, v)| v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregatePoint {
    pub episode: usize,
    pub mean: f64,
    pub stderr: f64,
    pub n_runs: usize,
    pub n_diverged: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AggregatedCurve {
    pub points: Vec<AggregatePoint>,
    pub n_runs: usize,
    pub n_diverged: usize,
}

impl AggregatedCurve {
    pub fn final_point(&self) -> Option<&AggregatePoint> {
        self.points.last()
    }

    pub fn at(&self, episode: usize) -> Option<&AggregatePoint> {
        self.points.iter().find(|p| p.episode == episode)
    }
}

/// Mean and standard error across runs at each evaluation point. Diverged
/// runs are excluded and counted. With fewer than two surviving runs the
/// result has no points.
pub fn aggregate(curves: &[LearningCurve]) -> Result<AggregatedCurve> {
    let valid: Vec<&LearningCurve> = curves.iter().filter(|c| !c.diverged()).collect();
    let n_diverged = curves.len() - valid.len();
    if valid.len() < 2 {
        return Ok(AggregatedCurve {
            points: Vec::new(),
            n_runs: valid.len(),
            n_diverged,
        });
    }
    let first = valid[0];
    for c in &valid {
        if c.points.len() != first.points.len()
            || c.points.iter().zip(&first.points).any(|(a, b)| a.0 != b.0)
        {
            return Err(Error::contract(format!(
                "run {} has different evaluation points from run {}",
                c.trial, first.trial
            )));
        }
    }
    let k = valid.len() as f64;
    let points = (0..first.points.len())
        .map(|idx| {
            let values = valid.iter().map(|c| c.points[idx].1);
            let mean = values.clone().sum::<f64>() / k;
            let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            AggregatePoint {
                episode: first.points[idx].0,
                mean,
                stderr: (var / k).sqrt(),
                n_runs: valid.len(),
                n_diverged,
            }
        })
        .collect();
    Ok(AggregatedCurve {
        points,
        n_runs: valid.len(),
        n_diverged,
    })
}

/// `%.12g`: 12 significant digits, fixed notation for moderate exponents,
/// trailing zeros removed.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "episode,mean,stderr,n_runs,n_diverged";

pub fn emit_csv<W: Write>(curve: &AggregatedCurve, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in &curve.points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.episode,
            format_g12(p.mean),
            format_g12(p.stderr),
            p.n_runs,
            p.n_diverged
        )?;
    }
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<AggregatePoint>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header `{CSV_HEADER}`"))),
    }
    lines
        .map(|(k, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::parse(k + 1, "expected 5 fields"));
            }
            let bad = |_| Error::parse(k + 1, "invalid number");
            Ok(AggregatePoint {
                episode: f[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                mean: f[1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                stderr: f[2].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                n_runs: f[3].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                n_diverged: f[4].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            })
        })
        .collect()
}

/// Per-run values, one row per evaluation point.
pub fn emit_runs_csv<W: Write>(curves: &[LearningCurve], mut out: W) -> Result<()> {
    writeln!(out, "trial,seed,episode,value,diverged")?;
    for c in curves {
        for &(episode, value) in &c.points {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.trial,
                c.seed,
                episode,
                format_g12(value),
                u8::from(c.diverged())
            )?;
        }
    }
    Ok(())
}
