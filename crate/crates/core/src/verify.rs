//! Randomised self-checks of the analysis oracles against the planners.
//! Each check draws its instances from a seeded stream so failures can be
//! reproduced.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::analysis::{fixed_point, lstd_solve, numerical_radius, td_fixed_loss, td_fixed_loss_replay};
use crate::envs::{derive_seed, RngStream};
use crate::error::Result;
use crate::features::{unit_basis, SparseVec};
use crate::model::{fit_least_squares, LinearModel, Transition, TransitionDataset};
use crate::planners::{rg_update, td0_update};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn random_sparse(rng: &mut RngStream, n: usize, density: f64) -> SparseVec {
    loop {
        let mut entries = Vec::new();
        for i in 0..n {
            if rng.random_bool(density) {
                entries.push((i, rng.random_range(-1.0..1.0)));
            }
        }
        if !entries.is_empty() {
            return SparseVec::new(n, entries).expect("sorted finite entries");
        }
    }
}

/// Random dataset whose next-feature vectors are scaled down so that LSTD
/// is well conditioned for typical draws.
pub fn random_dataset(rng: &mut RngStream, n: usize, len: usize) -> TransitionDataset {
    let transitions = (0..len)
        .map(|_| Transition {
            phi: random_sparse(rng, n, 0.6),
            reward: rng.random_range(-1.0..1.0),
            next: random_sparse(rng, n, 0.6).scaled(0.5),
        })
        .collect();
    TransitionDataset::from_transitions(n, transitions).expect("consistent dimensions")
}

/// Dense random model with entries uniform in `(-scale, scale)`.
pub fn random_model(rng: &mut RngStream, n: usize, scale: f64) -> LinearModel {
    let f = DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale));
    let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    LinearModel::from_dense(&f, &b, 0.0).expect("finite model")
}

fn check(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match body() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn lstd_equivalence(seed: u64) -> Check {
    check("lstd equals fixed point of least-squares model", || {
        let mut rng = RngStream::new(seed);
        let mut worst: f64 = 0.0;
        let mut skipped = 0;
        for _ in 0..100 {
            let n = rng.random_range(2..=8);
            let len = rng.random_range(20..=80);
            let gamma = [0.5, 0.9, 0.99][rng.random_range(0..3)];
            let data = random_dataset(&mut rng, n, len);
            let (Ok(a), Ok(model)) = (lstd_solve(&data, gamma), fit_least_squares(&data)) else {
                skipped += 1;
                continue;
            };
            let b = fixed_point(&model, gamma)?;
            for i in 0..n {
                worst = worst.max((a[i] - b[i]).abs());
            }
        }
        Ok((worst <= 1e-8 && skipped < 10, format!("max abs diff {worst:.3e}, {skipped} ill-posed skipped")))
    })
}

fn radius_sampling(seed: u64) -> Check {
    check("numerical radius bounds sampled quadratic forms", || {
        let mut rng = RngStream::new(seed);
        let mut worst_gap: f64 = 0.0;
        let mut violations = 0;
        for _ in 0..20 {
            let n = rng.random_range(2..6);
            let f = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let r = numerical_radius(&f)?;
            let mut best = f64::NEG_INFINITY;
            for _ in 0..5_000 {
                let x: DVector<f64> = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let x = &x / x.norm();
                best = best.max((x.transpose() * &f * &x)[(0, 0)]);
            }
            if best > r + 1e-9 {
                violations += 1;
            }
            worst_gap = worst_gap.max(r - best);
        }
        Ok((violations == 0, format!("{violations} violations, largest gap {worst_gap:.3e}")))
    })
}

fn stationarity(seed: u64) -> Check {
    check("fixed point is stationary under TD(0) and RG", || {
        let mut rng = RngStream::new(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let n = rng.random_range(2..8);
            let gamma = rng.random_range(0.5..0.99);
            let model = random_model(&mut rng, n, 0.5 / n as f64 * 2.0);
            let theta = fixed_point(&model, gamma)?;
            for i in 0..n {
                let e = unit_basis(i, n)?;
                let (next, r) = model.predict(&e)?;
                for rule in [td0_update, rg_update] {
                    let mut t = theta.clone();
                    rule(&mut t, &e, r, &next, gamma, 0.5)?;
                    for k in 0..n {
                        worst = worst.max((t[k] - theta[k]).abs());
                    }
                }
            }
        }
        Ok((worst <= 1e-12, format!("max change {worst:.3e}")))
    })
}

fn loss_forms(seed: u64) -> Check {
    check("TD-fixed-point loss: matrix form equals replay form", || {
        let mut rng = RngStream::new(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let n = rng.random_range(2..8);
            let data = random_dataset(&mut rng, n, 50);
            let theta: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let gamma = rng.random_range(0.0..1.0);
            let dense = td_fixed_loss(&data, &theta, gamma)?;
            let replay = td_fixed_loss_replay(
                data.iter().map(|t| (&t.phi, t.reward, Some(&t.next))),
                &theta,
                gamma,
            );
            worst = worst.max((dense - replay).abs() / (1.0 + dense));
        }
        Ok((worst <= 1e-9, format!("max relative diff {worst:.3e}")))
    })
}

/// Runs every check with instance streams derived from `seed`.
pub fn run_checks(seed: u64) -> Vec<Check> {
    vec![
        lstd_equivalence(derive_seed(seed, &[1])),
        radius_sampling(derive_seed(seed, &[2])),
        stationarity(derive_seed(seed, &[3])),
        loss_forms(derive_seed(seed, &[4])),
    ]
}
