//! Learned linear world models.
//!
//! A [`LinearModel`] predicts the expected next feature vector as `F phi`
//! and the expected reward as `b^T phi`. `F` is stored twice, column-major
//! for prediction (a basis vector `e_j` selects column `j`) and row-major for
//! the predecessor scans of prioritized sweeping. Both copies are kept in
//! sync on every write and entries with magnitude at or below the drop
//! tolerance are removed from both.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::analysis::condition_number;
use crate::error::{check_dim, Error, Result};
use crate::features::SparseVec;

/// Entries of `F` with `|value| <= DEFAULT_DROP_TOLERANCE` are treated as
/// structural zeros.
pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-8;

const SNAPSHOT_HEADER: &str = "linear-dyna model v1";

/// Relative singular-value cutoff for treating `C` as rank deficient.
const SINGULAR_CONDITION: f64 = 1e12;

type Entries = Vec<(usize, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    n: usize,
    drop_tolerance: f64,
    /// `columns[j]` holds `(i, F[i][j])`, sorted by `i`.
    columns: Vec<Entries>,
    /// `rows[i]` holds `(j, F[i][j])`, sorted by `j`.
    rows: Vec<Entries>,
    reward: Vec<f64>,
}

impl LinearModel {
    /// Zero model (`F = 0`, `b = 0`) with the default drop tolerance.
    pub fn new(n: usize) -> Self {
        LinearModel {
            n,
            drop_tolerance: DEFAULT_DROP_TOLERANCE,
            columns: vec![Vec::new(); n],
            rows: vec![Vec::new(); n],
            reward: vec![0.0; n],
        }
    }

    pub fn with_drop_tolerance(n: usize, drop_tolerance: f64) -> Result<Self> {
        if !(drop_tolerance >= 0.0 && drop_tolerance.is_finite()) {
            return Err(Error::contract("drop tolerance must be finite and non-negative"));
        }
        Ok(LinearModel {
            drop_tolerance,
            ..LinearModel::new(n)
        })
    }

    /// Builds a model from dense `F` and `b`, pruning small entries.
    pub fn from_dense(f: &DMatrix<f64>, b: &DVector<f64>, drop_tolerance: f64) -> Result<Self> {
        let n = b.len();
        if f.nrows() != n || f.ncols() != n {
            return Err(Error::contract(format!(
                "F is {}x{} but b has length {n}",
                f.nrows(),
                f.ncols()
            )));
        }
        let mut m = LinearModel::with_drop_tolerance(n, drop_tolerance)?;
        for j in 0..n {
            for i in 0..n {
                m.set(i, j, f[(i, j)])?;
            }
        }
        for i in 0..n {
            m.set_reward(i, b[i])?;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn drop_tolerance(&self) -> f64 {
        self.drop_tolerance
    }

    /// Number of stored nonzeros of `F`.
    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// The reward weights `b`.
    pub fn reward_weights(&self) -> &[f64] {
        &self.reward
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let col = &self.columns[j];
        match col.binary_search_by_key(&i, |&(r, _)| r) {
            Ok(pos) => col[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Sets `F[i][j]`; values at or below the drop tolerance remove the
    /// entry.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        if !value.is_finite() {
            return Err(Error::contract("model entries must be finite"));
        }
        let kept = (value.abs() > self.drop_tolerance).then_some(value);
        put(&mut self.columns[j], i, kept);
        put(&mut self.rows[i], j, kept);
        Ok(())
    }

    pub fn set_reward(&mut self, i: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        if !value.is_finite() {
            return Err(Error::contract("reward weights must be finite"));
        }
        self.reward[i] = value;
        Ok(())
    }

    /// Stored nonzeros `(i, F[i][j])` of column `j`, sorted by row.
    ///
    /// # Panics
    /// If `j >= dim()`.
    pub fn column_entries(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    /// Column `j` of `F`, i.e. the predicted next features for `e_j`.
    pub fn column(&self, j: usize) -> Result<SparseVec> {
        self.check_index(j)?;
        Ok(SparseVec::from_sorted_unchecked(self.n, self.columns[j].clone()))
    }

    /// Stored nonzeros `(j, F[i][j])` of row `i`, sorted by column. These
    /// are the features `j` whose successor prediction involves feature `i`.
    ///
    /// # Panics
    /// If `i >= dim()`.
    pub fn row_nonzeros(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `theta^T F e_j` without materialising the column.
    pub fn column_dot(&self, j: usize, theta: &[f64]) -> f64 {
        self.columns[j].iter().map(|&(i, v)| v * theta[i]).sum()
    }

    /// Predicted reward `b^T phi`.
    pub fn reward_of(&self, phi: &SparseVec) -> f64 {
        phi.dot_dense(&self.reward)
    }

    /// Predicted `(F phi, b^T phi)`. Entries of `F phi` at or below the drop
    /// tolerance are omitted.
    pub fn predict(&self, phi: &SparseVec) -> Result<(SparseVec, f64)> {
        check_dim(self.n, phi.dim())?;
        let tol = self.drop_tolerance;
        let next: Entries = self
            .apply(phi)
            .into_iter()
            .filter(|&(_, v)| v.abs() > tol && v != 0.0)
            .collect();
        Ok((
            SparseVec::from_sorted_unchecked(self.n, next),
            self.reward_of(phi),
        ))
    }

    /// One gradient-descent step on the squared prediction errors:
    /// `F += alpha (phi' - F phi) phi^T` and `b += alpha (r - b^T phi) phi`.
    /// Only columns `j` with `phi[j] != 0` change.
    pub fn update(&mut self, phi: &SparseVec, reward: f64, next: &SparseVec, alpha: f64) -> Result<()> {
        check_dim(self.n, phi.dim())?;
        check_dim(self.n, next.dim())?;
        if alpha.is_nan() || alpha < 0.0 {
            return Err(Error::contract("step size must be non-negative"));
        }
        let error = subtract_sorted(next.entries(), &self.apply(phi));
        let reward_error = reward - self.reward_of(phi);
        let tol = self.drop_tolerance;

        for &(j, pj) in phi.entries() {
            let scale = alpha * pj;
            if scale == 0.0 {
                continue;
            }
            let old = std::mem::take(&mut self.columns[j]);
            let mut merged = Vec::with_capacity(old.len() + error.len());
            let (mut a, mut b) = (0, 0);
            while a < old.len() || b < error.len() {
                let take_old = b == error.len() || (a < old.len() && old[a].0 < error[b].0);
                let take_err = a == old.len() || (b < error.len() && error[b].0 < old[a].0);
                if take_old {
                    merged.push(old[a]);
                    a += 1;
                    continue;
                }
                let (i, delta) = (error[b].0, scale * error[b].1);
                let value = if take_err {
                    b += 1;
                    delta
                } else {
                    let v = old[a].1 + delta;
                    a += 1;
                    b += 1;
                    v
                };
                let kept = (value.abs() > tol && value != 0.0).then_some(value);
                if let Some(v) = kept {
                    merged.push((i, v));
                }
                put(&mut self.rows[i], j, kept);
            }
            self.columns[j] = merged;
        }

        for &(j, pj) in phi.entries() {
            self.reward[j] += alpha * reward_error * pj;
        }
        Ok(())
    }

    /// All stored `(i, j, F[i][j])` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut f = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            f[(i, j)] = v;
        }
        (f, DVector::from_column_slice(&self.reward))
    }

    /// Writes the text snapshot: a versioned header, the nonzero entries of
    /// `b`, then the nonzero triplets of `F` in row-major order.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SNAPSHOT_HEADER}")?;
        writeln!(out, "n {}", self.n)?;
        writeln!(out, "drop_tolerance {:e}", self.drop_tolerance)?;
        let b: Vec<(usize, f64)> = self
            .reward
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        writeln!(out, "b {}", b.len())?;
        for (i, v) in b {
            writeln!(out, "{i} {v:e}")?;
        }
        writeln!(out, "F {}", self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:e}")?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = SnapshotLines::new(input);
        lines.expect_exact(SNAPSHOT_HEADER)?;
        let n: usize = lines.keyed("n")?;
        let tol: f64 = lines.keyed("drop_tolerance")?;
        let mut model = LinearModel::with_drop_tolerance(n, tol)?;
        let nb: usize = lines.keyed("b")?;
        for _ in 0..nb {
            let (line, fields) = lines.fields(2)?;
            let i = parse_field::<usize>(line, fields[0])?;
            let v = parse_field::<f64>(line, fields[1])?;
            model.set_reward(i, v).map_err(|e| Error::parse(line, e.to_string()))?;
        }
        let nf: usize = lines.keyed("F")?;
        for _ in 0..nf {
            let (line, fields) = lines.fields(3)?;
            let i = parse_field::<usize>(line, fields[0])?;
            let j = parse_field::<usize>(line, fields[1])?;
            let v = parse_field::<f64>(line, fields[2])?;
            model.set(i, j, v).map_err(|e| Error::parse(line, e.to_string()))?;
        }
        lines.expect_end()?;
        Ok(model)
    }

    /// Raw `F phi` as sorted `(row, value)` pairs, without pruning.
    fn apply(&self, phi: &SparseVec) -> Entries {
        let mut pairs: Entries = Vec::new();
        for &(j, pj) in phi.entries() {
            pairs.extend(self.columns[j].iter().map(|&(i, v)| (i, v * pj)));
        }
        // Stable sort keeps the summation order fixed for equal rows.
        pairs.sort_by_key(|&(i, _)| i);
        let mut out: Entries = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "index {i} out of range for model dimension {}",
                self.n
            )))
        }
    }
}

/// Inserts, overwrites or removes key `k` in a sorted entry list.
fn put(list: &mut Entries, k: usize, value: Option<f64>) {
    match (list.binary_search_by_key(&k, |&(x, _)| x), value) {
        (Ok(pos), Some(v)) => list[pos].1 = v,
        (Ok(pos), None) => {
            list.remove(pos);
        }
        (Err(pos), Some(v)) => list.insert(pos, (k, v)),
        (Err(_), None) => {}
    }
}

/// `a - b` for sorted sparse entry lists, dropping exact zeros.
fn subtract_sorted(a: &[(usize, f64)], b: &[(usize, f64)]) -> Entries {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (0, 0);
    while x < a.len() || y < b.len() {
        let entry = if y == b.len() || (x < a.len() && a[x].0 < b[y].0) {
            x += 1;
            a[x - 1]
        } else if x == a.len() || b[y].0 < a[x].0 {
            y += 1;
            (b[y - 1].0, -b[y - 1].1)
        } else {
            x += 1;
            y += 1;
            (a[x - 1].0, a[x - 1].1 - b[y - 1].1)
        };
        if entry.1 != 0.0 {
            out.push(entry);
        }
    }
    out
}

/// One model per action, all of the same dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionModelSet {
    models: Vec<LinearModel>,
}

impl ActionModelSet {
    pub fn new(num_actions: usize, n: usize) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::contract("action model set needs at least one action"));
        }
        Ok(ActionModelSet {
            models: vec![LinearModel::new(n); num_actions],
        })
    }

    pub fn from_models(models: Vec<LinearModel>) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::contract("action model set needs at least one action"))?;
        let n = first.dim();
        for m in &models {
            check_dim(n, m.dim())?;
        }
        Ok(ActionModelSet { models })
    }

    pub fn num_actions(&self) -> usize {
        self.models.len()
    }

    pub fn dim(&self) -> usize {
        self.models[0].dim()
    }

    pub fn get(&self, action: usize) -> &LinearModel {
        &self.models[action]
    }

    pub fn get_mut(&mut self, action: usize) -> &mut LinearModel {
        &mut self.models[action]
    }

    pub fn iter(&self) -> impl Iterator<Item = &LinearModel> {
        self.models.iter()
    }
}

/// A `(phi, r, phi')` sample. Terminal transitions carry an empty `next`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub phi: SparseVec,
    pub reward: f64,
    pub next: SparseVec,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransitionDataset {
    dim: usize,
    transitions: Vec<Transition>,
}

impl TransitionDataset {
    pub fn new(dim: usize) -> Self {
        TransitionDataset {
            dim,
            transitions: Vec::new(),
        }
    }

    pub fn from_transitions(dim: usize, transitions: Vec<Transition>) -> Result<Self> {
        let mut data = TransitionDataset::new(dim);
        for t in transitions {
            data.push(t)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        check_dim(self.dim, t.phi.dim())?;
        check_dim(self.dim, t.next.dim())?;
        self.transitions.push(t);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transition> {
        self.transitions.iter()
    }

    pub(crate) fn non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::contract("dataset is empty"))
        } else {
            Ok(())
        }
    }
}

impl<'a> IntoIterator for &'a TransitionDataset {
    type Item = &'a Transition;
    type IntoIter = std::slice::Iter<'a, Transition>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

/// Least-squares model of a dataset: `F^T = C^{-1} D` and `b = C^{-1} r`,
/// with `C = sum phi phi^T`, `D = sum phi phi'^T` and `r = sum phi r`.
pub fn fit_least_squares(data: &TransitionDataset) -> Result<LinearModel> {
    data.non_empty()?;
    let n = data.dim();
    let mut c = DMatrix::<f64>::zeros(n, n);
    let mut d = DMatrix::<f64>::zeros(n, n);
    let mut rbar = DVector::<f64>::zeros(n);
    for t in data {
        for &(i, pi) in t.phi.entries() {
            for &(j, pj) in t.phi.entries() {
                c[(i, j)] += pi * pj;
            }
            for &(j, qj) in t.next.entries() {
                d[(i, j)] += pi * qj;
            }
            rbar[i] += pi * t.reward;
        }
    }
    let cond = condition_number(&c);
    if cond.is_nan() || cond > SINGULAR_CONDITION {
        return Err(Error::Singular(format!(
            "feature covariance is rank deficient (condition estimate {cond:e})"
        )));
    }
    let lu = c.clone().lu();
    let ft = lu
        .solve(&d)
        .ok_or_else(|| Error::Singular("feature covariance is singular".into()))?;
    let b = lu
        .solve(&rbar)
        .ok_or_else(|| Error::Singular("feature covariance is singular".into()))?;

    let residual = (&c * &ft - &d).norm();
    let scale = d.norm().max(c.norm() * ft.norm()).max(f64::MIN_POSITIVE);
    if residual > 1e-8 * scale {
        return Err(Error::Singular(format!(
            "normal equations not satisfied (relative residual {:e})",
            residual / scale
        )));
    }
    LinearModel::from_dense(&ft.transpose(), &b, DEFAULT_DROP_TOLERANCE)
}

struct SnapshotLines<R> {
    input: std::io::Lines<R>,
    line: usize,
    buf: String,
}

impl<R: BufRead> SnapshotLines<R> {
    fn new(input: R) -> Self {
        SnapshotLines {
            input: input.lines(),
            line: 0,
            buf: String::new(),
        }
    }

    fn next_line(&mut self) -> Result<(usize, &str)> {
        match self.input.next() {
            Some(l) => {
                self.line += 1;
                self.buf = l?;
                Ok((self.line, self.buf.trim_end()))
            }
            None => Err(Error::parse(self.line + 1, "unexpected end of snapshot")),
        }
    }

    fn expect_exact(&mut self, expected: &str) -> Result<()> {
        let (line, text) = self.next_line()?;
        if text == expected {
            Ok(())
        } else {
            Err(Error::parse(line, format!("expected `{expected}`, found `{text}`")))
        }
    }

    fn keyed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, text) = self.next_line()?;
        match text.split_once(' ') {
            Some((k, v)) if k == key => parse_field(line, v),
            _ => Err(Error::parse(line, format!("expected `{key} <value>`, found `{text}`"))),
        }
    }

    fn fields(&mut self, count: usize) -> Result<(usize, Vec<&str>)> {
        let (line, text) = self.next_line()?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != count {
            return Err(Error::parse(line, format!("expected {count} fields, found `{text}`")));
        }
        Ok((line, fields))
    }

    fn expect_end(&mut self) -> Result<()> {
        for l in self.input.by_ref() {
            self.line += 1;
            if !l?.trim().is_empty() {
                return Err(Error::parse(self.line, "trailing content after snapshot"));
            }
        }
        Ok(())
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(line: usize, field: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{field}`")))
}
