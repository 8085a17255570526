//! Sparse feature vectors and the feature constructions used by the
//! benchmarks.

use std::fmt;

use crate::envs::mountain_car::{POSITION_MAX, POSITION_MIN, VELOCITY_MAX, VELOCITY_MIN};
use crate::error::{check_dim, Error, Result};

/// Highest Boyan chain state (the start state).
pub const BOYAN_MAX_STATE: usize = 98;
/// Number of Boyan interpolation features.
pub const BOYAN_FEATURES: usize = 25;
/// Spacing between consecutive Boyan feature anchors.
const BOYAN_ANCHOR_SPACING: f64 = 4.0;

/// A sparse real vector: strictly increasing indices, no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVec {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> Self {
        SparseVec {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds a vector from entries with strictly increasing indices.
    /// Exact zeros are dropped.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        let mut prev: Option<usize> = None;
        for &(i, v) in &entries {
            if i >= dim {
                return Err(Error::contract(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            if prev.is_some_and(|p| p >= i) {
                return Err(Error::contract("indices must be strictly increasing"));
            }
            if !v.is_finite() {
                return Err(Error::contract(format!("non-finite value at index {i}")));
            }
            prev = Some(i);
        }
        let entries = entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        Ok(SparseVec { dim, entries })
    }

    /// Builds a vector from unordered pairs; repeated indices are summed.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        pairs.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        SparseVec::new(dim, merged)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        SparseVec {
            dim: values.len(),
            entries,
        }
    }

    /// Trusted constructor for internal callers that already maintain the
    /// ordering and non-zero invariants.
    pub(crate) fn from_sorted_unchecked(dim: usize, entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(i, v)| i < dim && v != 0.0));
        SparseVec { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, other: &SparseVec) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        Ok(sum)
    }

    /// Dot product with a dense vector of the same dimension.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVec {
        if factor == 0.0 {
            return SparseVec::zeros(self.dim);
        }
        let entries = self
            .entries
            .iter()
            .map(|&(i, v)| (i, v * factor))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        SparseVec {
            dim: self.dim,
            entries,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

impl fmt::Display for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(dim {}, {{", self.dim)?;
        for (k, (i, v)) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}\u{21a6}{v}")?;
        }
        write!(f, "}})")
    }
}

pub fn dot(u: &SparseVec, v: &SparseVec) -> Result<f64> {
    u.dot(v)
}

/// The `i`-th standard basis vector of dimension `n`.
pub fn unit_basis(i: usize, n: usize) -> Result<SparseVec> {
    if i >= n {
        return Err(Error::contract(format!(
            "basis index {i} out of range for dimension {n}"
        )));
    }
    Ok(SparseVec::from_sorted_unchecked(n, vec![(i, 1.0)]))
}

/// Piecewise-linear interpolation features for the 98-state Boyan chain.
///
/// Feature `i` is a triangle of half-width 4 centred on state `4 i`, so
/// states on an anchor activate a single feature and states between two
/// anchors split their weight between them. States 97 and 98 lie past the
/// last anchor and keep the same formula.
pub fn boyan_features(state: usize) -> Result<SparseVec> {
    if state > BOYAN_MAX_STATE {
        return Err(Error::contract(format!(
            "Boyan state {state} out of range 0..={BOYAN_MAX_STATE}"
        )));
    }
    let s = state as f64;
    let lo = state / 4;
    let entries = (lo.saturating_sub(1)..=(lo + 1).min(BOYAN_FEATURES - 1))
        .filter_map(|i| {
            let w = 1.0 - (s - BOYAN_ANCHOR_SPACING * i as f64).abs() / BOYAN_ANCHOR_SPACING;
            (w > 0.0).then_some((i, w))
        })
        .collect();
    Ok(SparseVec::from_sorted_unchecked(BOYAN_FEATURES, entries))
}

/// Parameters of a hashed tile coder over the Mountain Car state box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TileCoderConfig {
    pub tilings: usize,
    /// Tiles per dimension of each (unshifted) tiling.
    pub grid: usize,
    /// Number of hashed features.
    pub size: usize,
    pub seed: u64,
}

impl Default for TileCoderConfig {
    fn default() -> Self {
        TileCoderConfig {
            tilings: 10,
            grid: 8,
            size: 10_000,
            seed: 0,
        }
    }
}

/// Hashed tile coding over `(position, velocity)`.
///
/// Tiling `k` is a `grid x grid` uniform partition of the state box shifted
/// by `k / tilings` of a tile width along both axes; the shift means each
/// tiling has `grid + 1` cells per axis. Every `(tiling, cell)` triple is
/// hashed into `0..size`, and colliding indices within a single state are
/// merged into one binary feature.
#[derive(Clone, Debug)]
pub struct TileCoder {
    config: TileCoderConfig,
    position_width: f64,
    velocity_width: f64,
}

impl TileCoder {
    pub fn new(config: TileCoderConfig) -> Result<Self> {
        if config.tilings == 0 || config.grid == 0 || config.size == 0 {
            return Err(Error::Config(
                "tile coder needs at least one tiling, grid cell and feature".into(),
            ));
        }
        Ok(TileCoder {
            config,
            position_width: (POSITION_MAX - POSITION_MIN) / config.grid as f64,
            velocity_width: (VELOCITY_MAX - VELOCITY_MIN) / config.grid as f64,
        })
    }

    pub fn config(&self) -> &TileCoderConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.size
    }

    /// Grid coordinates of the cell containing the state in tiling `k`.
    pub fn cell(&self, tiling: usize, position: f64, velocity: f64) -> (usize, usize) {
        let offset = tiling as f64 / self.config.tilings as f64;
        let x = ((position - POSITION_MIN) / self.position_width + offset).floor();
        let y = ((velocity - VELOCITY_MIN) / self.velocity_width + offset).floor();
        (x.max(0.0) as usize, y.max(0.0) as usize)
    }

    /// Hashed feature index of one tiling cell.
    pub fn hash_cell(&self, tiling: usize, x: usize, y: usize) -> usize {
        let mut h = splitmix64(self.config.seed);
        for part in [tiling as u64, x as u64, y as u64] {
            h = splitmix64(h ^ part.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        }
        (h % self.config.size as u64) as usize
    }

    pub fn encode(&self, position: f64, velocity: f64) -> SparseVec {
        let mut active: Vec<usize> = (0..self.config.tilings)
            .map(|k| {
                let (x, y) = self.cell(k, position, velocity);
                self.hash_cell(k, x, y)
            })
            .collect();
        active.sort_unstable();
        active.dedup();
        SparseVec::from_sorted_unchecked(
            self.config.size,
            active.into_iter().map(|i| (i, 1.0)).collect(),
        )
    }
}

pub fn tile_code(position: f64, velocity: f64, coder: &TileCoder) -> SparseVec {
    coder.encode(position, velocity)
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
