//! Binary energy models in the Ising form
//! `E(s) = -Σ J_ij s_i s_j - Σ h_i s_i` with `s_i ∈ {-1, +1}`.
//!
//! The `{0,1}` bit convention maps `x = 0 ↔ s = -1` and `x = 1 ↔ s = +1`;
//! it only appears at the edges of the crate (state indices used by the
//! exact oracles, RBM weight files).

mod format;
mod generate;

pub use format::{parse_model, parse_rbm_weights, write_model, RbmWeights};
pub use generate::{
    make_bipartite_rbm, make_chimera, make_complete, make_cube_3d, make_torus_2d, random_state, CouplingSpec,
    FieldSpec, WeightSource,
};

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("spin index {index} out of range for {len} spins")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("self-loop on spin {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("inverse temperature must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("non-finite coupling or field value")]
    NonFinite,
    #[error("model must have at least one spin")]
    Empty,
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("bipartition {split} is invalid: {reason}")]
    InvalidBipartition { split: usize, reason: String },
    #[error("spin values must be -1 or +1, got {0}")]
    InvalidSpin(i8),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model too large for exhaustive state indexing ({0} spins)")]
    TooLarge(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A configuration of `M` spins, each exactly `-1` or `+1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpinState(Vec<i8>);

impl SpinState {
    pub fn new(spins: Vec<i8>) -> Result<Self, ModelError> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(ModelError::InvalidSpin(bad));
        }
        Ok(SpinState(spins))
    }

    pub fn all_up(len: usize) -> Self {
        SpinState(vec![1; len])
    }

    /// Builds the state whose bit `i` of `index` is `1` exactly when spin `i` is `+1`.
    pub fn from_index(index: usize, len: usize) -> Self {
        SpinState(
            (0..len)
                .map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    /// Inverse of [`SpinState::from_index`]; only meaningful for `len < usize::BITS`.
    pub fn to_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0usize, |acc, (i, _)| acc | (1 << i))
    }

    /// Builds a state from `{0,1}` bits.
    pub fn from_bits(bits: &[u8]) -> Result<Self, ModelError> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(-1),
                1 => Ok(1),
                other => Err(ModelError::InvalidSpin(other as i8)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(SpinState)
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&s| u8::from(s == 1)).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    #[inline]
    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    /// In-place flip; panics on out-of-range index (hot path).
    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, value: i8) {
        debug_assert!(value == 1 || value == -1);
        self.0[i] = value;
    }

    /// `F(x, i)`: a copy of the state with bit `i` inverted.
    pub fn apply_flip(&self, i: usize) -> Result<SpinState, ModelError> {
        self.check_index(i)?;
        let mut out = self.clone();
        out.flip(i);
        Ok(out)
    }

    /// `F(x, i_1, ..., i_k)`, applied left to right.
    pub fn apply_flips(&self, indices: &[usize]) -> Result<SpinState, ModelError> {
        let mut out = self.clone();
        for &i in indices {
            out.check_index(i)?;
            out.flip(i);
        }
        Ok(out)
    }

    pub fn hamming_distance(&self, other: &SpinState) -> Result<usize, ModelError> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }

    pub fn magnetization(&self) -> f64 {
        self.0.iter().map(|&s| f64::from(s)).sum::<f64>() / self.len() as f64
    }

    fn check_index(&self, i: usize) -> Result<(), ModelError> {
        if i >= self.len() {
            return Err(ModelError::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for SpinState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SpinState[")?;
        for &s in &self.0 {
            f.write_str(if s == 1 { "+" } else { "-" })?;
        }
        f.write_str("]")
    }
}

/// `P(x, y)`: indices where the two states agree.
pub fn agreement_set(x: &SpinState, y: &SpinState) -> Result<Vec<usize>, ModelError> {
    check_len(x.len(), y.len())?;
    Ok((0..x.len()).filter(|&i| x.get(i) == y.get(i)).collect())
}

fn check_len(expected: usize, actual: usize) -> Result<(), ModelError> {
    if expected != actual {
        return Err(ModelError::DimensionMismatch { expected, actual });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

/// Immutable Ising model with compressed adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    num_spins: usize,
    beta: f64,
    edges: Vec<Edge>,
    fields: Vec<f64>,
    bipartition: Option<usize>,
    // CSR adjacency: neighbors of i are adj[offsets[i]..offsets[i+1]]
    offsets: Vec<usize>,
    adj: Vec<(usize, f64)>,
}

impl IsingModel {
    /// Validates and normalizes the edge list (`i < j`, sorted lexicographically).
    pub fn new(
        num_spins: usize,
        beta: f64,
        edges: Vec<Edge>,
        fields: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if num_spins == 0 {
            return Err(ModelError::Empty);
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ModelError::InvalidBeta(beta));
        }
        check_len(num_spins, fields.len())?;
        if fields.iter().any(|h| !h.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            for idx in [e.i, e.j] {
                if idx >= num_spins {
                    return Err(ModelError::IndexOutOfRange {
                        index: idx,
                        len: num_spins,
                    });
                }
            }
            if e.i == e.j {
                return Err(ModelError::SelfLoop(e.i));
            }
            if !e.coupling.is_finite() {
                return Err(ModelError::NonFinite);
            }
            let (i, j) = if e.i < e.j { (e.i, e.j) } else { (e.j, e.i) };
            if !seen.insert((i, j)) {
                return Err(ModelError::DuplicateEdge(i, j));
            }
            normalized.push(Edge {
                i,
                j,
                coupling: e.coupling,
            });
        }
        normalized.sort_by_key(|e| (e.i, e.j));

        let mut degree = vec![0usize; num_spins];
        for e in &normalized {
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut offsets = Vec::with_capacity(num_spins + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..num_spins].to_vec();
        let mut adj = vec![(0usize, 0.0f64); offsets[num_spins]];
        for e in &normalized {
            adj[cursor[e.i]] = (e.j, e.coupling);
            cursor[e.i] += 1;
            adj[cursor[e.j]] = (e.i, e.coupling);
            cursor[e.j] += 1;
        }

        Ok(IsingModel {
            num_spins,
            beta,
            edges: normalized,
            fields,
            bipartition: None,
            offsets,
            adj,
        })
    }

    /// Declares spins `0..split` as one layer and `split..M` as the other.
    /// Fails if any edge lies inside a layer.
    pub fn with_bipartition(mut self, split: usize) -> Result<Self, ModelError> {
        if split == 0 || split >= self.num_spins {
            return Err(ModelError::InvalidBipartition {
                split,
                reason: format!("both layers must be non-empty (M = {})", self.num_spins),
            });
        }
        if let Some(e) = self
            .edges
            .iter()
            .find(|e| (e.i < split) == (e.j < split))
        {
            return Err(ModelError::InvalidBipartition {
                split,
                reason: format!("edge ({}, {}) lies within a layer", e.i, e.j),
            });
        }
        self.bipartition = Some(split);
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self, ModelError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ModelError::InvalidBeta(beta));
        }
        self.beta = beta;
        Ok(self)
    }

    #[inline]
    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn bipartition(&self) -> Option<usize> {
        self.bipartition
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.num_spins as f64
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&h| h != 0.0)
    }

    /// Rebuilds the unordered edge list from the adjacency lists.
    pub fn edges_from_adjacency(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = (0..self.num_spins)
            .flat_map(|i| {
                self.neighbors(i)
                    .iter()
                    .filter(move |(j, _)| i < *j)
                    .map(move |&(j, coupling)| Edge { i, j, coupling })
            })
            .collect();
        out.sort_by_key(|e| (e.i, e.j));
        out
    }

    pub fn check_state(&self, state: &SpinState) -> Result<(), ModelError> {
        check_len(self.num_spins, state.len())
    }

    fn check_index(&self, i: usize) -> Result<(), ModelError> {
        if i >= self.num_spins {
            return Err(ModelError::IndexOutOfRange {
                index: i,
                len: self.num_spins,
            });
        }
        Ok(())
    }

    pub fn energy(&self, state: &SpinState) -> Result<f64, ModelError> {
        self.check_state(state)?;
        Ok(self.energy_unchecked(state))
    }

    pub(crate) fn energy_unchecked(&self, state: &SpinState) -> f64 {
        let s = state.spins();
        let pair: f64 = self
            .edges
            .iter()
            .map(|e| e.coupling * f64::from(s[e.i] * s[e.j]))
            .sum();
        let field: f64 = self
            .fields
            .iter()
            .zip(s)
            .map(|(h, &si)| h * f64::from(si))
            .sum();
        -pair - field
    }

    /// `Σ_j J_ij s_j + h_i`.
    pub fn local_field(&self, state: &SpinState, i: usize) -> Result<f64, ModelError> {
        self.check_state(state)?;
        self.check_index(i)?;
        Ok(self.local_field_unchecked(state, i))
    }

    #[inline]
    pub(crate) fn local_field_unchecked(&self, state: &SpinState, i: usize) -> f64 {
        let s = state.spins();
        self.neighbors(i)
            .iter()
            .fold(self.fields[i], |acc, &(j, c)| acc + c * f64::from(s[j]))
    }

    /// `E(F(x, i)) - E(x) = 2 s_i f_i`, in `O(degree(i))`.
    pub fn flip_delta(&self, state: &SpinState, i: usize) -> Result<f64, ModelError> {
        self.check_state(state)?;
        self.check_index(i)?;
        Ok(self.flip_delta_unchecked(state, i))
    }

    #[inline]
    pub(crate) fn flip_delta_unchecked(&self, state: &SpinState, i: usize) -> f64 {
        2.0 * f64::from(state.get(i)) * self.local_field_unchecked(state, i)
    }
}
