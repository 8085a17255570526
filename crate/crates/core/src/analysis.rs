//! Closed-form oracles for linear Dyna planning and the loss measures used by
//! the experiments.
//!
//! Everything here is a pure function of its inputs. The dense routines are
//! meant for small and medium dimensions (the Boyan chain, synthetic test
//! models); the Mountain Car loss goes through [`td_fixed_loss_replay`],
//! which never forms an `n x n` matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::envs::{boyan_true_value, BoyanState};
use crate::error::{check_dim, Error, Result};
use crate::features::{boyan_features, SparseVec, BOYAN_FEATURES, BOYAN_MAX_STATE};
use crate::model::{LinearModel, TransitionDataset};
use crate::planners::Theta;

/// Condition estimates above this make a planning problem ill-posed.
pub const ILL_POSED_CONDITION: f64 = 1e12;

/// Largest dimension for which dense solves are attempted.
pub const MAX_DENSE_DIM: usize = 4096;

/// 2-norm condition number from the singular values; infinite when the
/// matrix is singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::contract(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("matrix has non-finite entries"));
    }
    Ok(())
}

/// `max over unit x of x^T F x`, which equals the largest eigenvalue of the
/// symmetric part `(F + F^T) / 2`.
pub fn numerical_radius(f: &DMatrix<f64>) -> Result<f64> {
    check_square_finite(f)?;
    if f.is_empty() {
        return Err(Error::contract("numerical radius of an empty matrix"));
    }
    let sym = (f + f.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.max())
}

/// Smallest eigenvalue of the symmetric part of a square matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    check_square_finite(m)?;
    let sym = (m + m.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.min())
}

/// Solves `(I - gamma F^T) theta = b`, the parameter vector every planning
/// update leaves unchanged.
pub fn fixed_point(model: &LinearModel, gamma: f64) -> Result<Theta> {
    let n = model.dim();
    if n > MAX_DENSE_DIM {
        return Err(Error::contract(format!(
            "dense fixed-point solve refused for dimension {n}"
        )));
    }
    let (f, b) = model.to_dense();
    fixed_point_dense(&f, &b, gamma).map(Theta::from)
}

pub fn fixed_point_dense(f: &DMatrix<f64>, b: &DVector<f64>, gamma: f64) -> Result<Vec<f64>> {
    check_square_finite(f)?;
    check_dim(f.nrows(), b.len())?;
    let n = b.len();
    let system = DMatrix::identity(n, n) - f.transpose() * gamma;
    let theta = solve_checked(&system, b, |condition| Error::IllPosed { condition })?;
    let residual = (&system * &theta - b).norm();
    let scale = b.norm().max(system.norm() * theta.norm());
    if scale > 0.0 && residual > 1e-10 * scale {
        return Err(Error::IllPosed {
            condition: condition_number(&system),
        });
    }
    Ok(theta.as_slice().to_vec())
}

fn solve_checked(
    system: &DMatrix<f64>,
    rhs: &DVector<f64>,
    on_singular: impl Fn(f64) -> Error,
) -> Result<DVector<f64>> {
    let condition = condition_number(system);
    if condition.is_nan() || condition > ILL_POSED_CONDITION {
        return Err(on_singular(condition));
    }
    system
        .clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| on_singular(f64::INFINITY))
}

/// LSTD(0) statistics of a dataset: `A = sum phi (phi - gamma phi')^T` and
/// `r = sum phi r`.
#[derive(Clone, Debug)]
pub struct LstdStats {
    pub a: DMatrix<f64>,
    pub rbar: DVector<f64>,
}

impl LstdStats {
    pub fn from_dataset(data: &TransitionDataset, gamma: f64) -> Result<Self> {
        data.non_empty()?;
        let n = data.dim();
        if n > MAX_DENSE_DIM {
            return Err(Error::contract(format!(
                "dense LSTD statistics refused for dimension {n}"
            )));
        }
        let mut a = DMatrix::zeros(n, n);
        let mut rbar = DVector::zeros(n);
        for t in data {
            for &(i, pi) in t.phi.entries() {
                for &(j, pj) in t.phi.entries() {
                    a[(i, j)] += pi * pj;
                }
                for &(j, qj) in t.next.entries() {
                    a[(i, j)] -= gamma * pi * qj;
                }
                rbar[i] += pi * t.reward;
            }
        }
        Ok(LstdStats { a, rbar })
    }

    /// `||A theta - r||_2`.
    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.rbar.len(), theta.len())?;
        let th = DVector::from_column_slice(theta);
        Ok((&self.a * th - &self.rbar).norm())
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        let theta = solve_checked(&self.a, &self.rbar, |c| {
            Error::Singular(format!("LSTD matrix is singular (condition estimate {c:e})"))
        })?;
        Ok(theta.as_slice().to_vec())
    }
}

/// The LSTD solution: `theta` with `sum phi (r + gamma phi'^T theta -
/// phi^T theta) = 0`.
pub fn lstd_solve(data: &TransitionDataset, gamma: f64) -> Result<Theta> {
    LstdStats::from_dataset(data, gamma)?.solve().map(Theta::from)
}

/// Mean of `1/2 (b^T phi + gamma theta^T F phi - theta^T phi)^2` over the
/// given start vectors.
pub fn rg_objective(
    model: &LinearModel,
    theta: &[f64],
    samples: &[SparseVec],
    gamma: f64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::contract("objective needs at least one sample"));
    }
    check_dim(model.dim(), theta.len())?;
    let mut total = 0.0;
    for phi in samples {
        let (next, r) = model.predict(phi)?;
        let delta = r + gamma * next.dot_dense(theta) - phi.dot_dense(theta);
        total += 0.5 * delta * delta;
    }
    Ok(total / samples.len() as f64)
}

/// TD-fixed-point loss `||A theta - r||_2` from the dense LSTD statistics.
pub fn td_fixed_loss(data: &TransitionDataset, theta: &[f64], gamma: f64) -> Result<f64> {
    LstdStats::from_dataset(data, gamma)?.loss(theta)
}

/// The same loss computed by replaying every transition through TD(0)
/// without applying the updates: the norm of the summed update directions
/// `sum delta_k phi_k`. `None` as the next features marks a terminal
/// transition.
pub fn td_fixed_loss_replay<'a, I>(transitions: I, theta: &[f64], gamma: f64) -> f64
where
    I: IntoIterator<Item = (&'a SparseVec, f64, Option<&'a SparseVec>)>,
{
    let mut sum = vec![0.0; theta.len()];
    for (phi, r, next) in transitions {
        let bootstrap = next.map_or(0.0, |q| q.dot_dense(theta));
        let delta = r + gamma * bootstrap - phi.dot_dense(theta);
        for &(i, v) in phi.entries() {
            sum[i] += delta * v;
        }
    }
    sum.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Root-mean-squared error of `theta^T phi(s)` against the exact Boyan chain
/// values, averaged over states `0..=98`.
pub fn rmse_vs_true(theta: &[f64]) -> Result<f64> {
    check_dim(BOYAN_FEATURES, theta.len())?;
    let mut total = 0.0;
    for s in 0..=BOYAN_MAX_STATE {
        let err = boyan_features(s)?.dot_dense(theta) - boyan_true_value(BoyanState(s));
        total += err * err;
    }
    Ok((total / (BOYAN_MAX_STATE + 1) as f64).sqrt())
}
