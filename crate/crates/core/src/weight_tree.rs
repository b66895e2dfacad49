//! Weighted index sampling with logarithmic-time point updates.
//!
//! [`WeightTree`] is an implicit complete binary tree over the next power of
//! two ≥ capacity (node 1 is the root, leaves start at `width`), padded with
//! zero leaves. [`FlatWeights`] is the linear-scan alternative used for dense
//! models, where one flip touches most candidates anyway.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("weight vector is empty")]
    Empty,
    #[error("weight {value} at index {index} is negative or not finite")]
    InvalidWeight { index: usize, value: f64 },
    #[error("index {index} out of range for capacity {capacity}")]
    IndexOutOfRange { index: usize, capacity: usize },
    #[error("total weight is zero")]
    ZeroTotal,
}

/// Full rebuild cadence bounding drift in the partial sums.
const REBUILD_INTERVAL: u32 = 1 << 16;

fn check_weight(index: usize, value: f64) -> Result<(), TreeError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(TreeError::InvalidWeight { index, value })
    }
}

#[derive(Debug, Clone)]
pub struct WeightTree {
    capacity: usize,
    width: usize,
    nodes: Vec<f64>,
    updates_since_rebuild: u32,
}

impl WeightTree {
    pub fn build(weights: &[f64]) -> Result<Self, TreeError> {
        if weights.is_empty() {
            return Err(TreeError::Empty);
        }
        for (i, &w) in weights.iter().enumerate() {
            check_weight(i, w)?;
        }
        let width = weights.len().next_power_of_two();
        let mut tree = WeightTree {
            capacity: weights.len(),
            width,
            nodes: vec![0.0; 2 * width],
            updates_since_rebuild: 0,
        };
        tree.nodes[width..width + weights.len()].copy_from_slice(weights);
        tree.rebuild_internal();
        Ok(tree)
    }

    /// Overwrites all leaves; `weights.len()` must equal the capacity.
    /// Validation is the caller's job (hot path).
    pub(crate) fn reset(&mut self, weights: impl Iterator<Item = f64>) {
        let mut n = 0;
        for (slot, w) in self.nodes[self.width..self.width + self.capacity]
            .iter_mut()
            .zip(weights)
        {
            debug_assert!(w.is_finite() && w >= 0.0);
            *slot = w;
            n += 1;
        }
        debug_assert_eq!(n, self.capacity);
        self.rebuild_internal();
    }

    fn rebuild_internal(&mut self) {
        for node in (1..self.width).rev() {
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
        self.updates_since_rebuild = 0;
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> Result<f64, TreeError> {
        self.check_index(i)?;
        Ok(self.nodes[self.width + i])
    }

    #[inline]
    #[cfg(test)]
    pub(crate) fn leaf(&self, i: usize) -> f64 {
        self.nodes[self.width + i]
    }

    pub fn update(&mut self, i: usize, w: f64) -> Result<(), TreeError> {
        self.check_index(i)?;
        check_weight(i, w)?;
        self.set(i, w);
        Ok(())
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, w: f64) {
        debug_assert!(w.is_finite() && w >= 0.0);
        let mut node = self.width + i;
        self.nodes[node] = w;
        self.updates_since_rebuild += 1;
        if self.updates_since_rebuild >= REBUILD_INTERVAL {
            self.rebuild_internal();
            return;
        }
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Inverse CDF in leaf order: the leaf `i` with
    /// `prefix(i) ≤ u·total < prefix(i + 1)`. Zero-weight leaves are never returned.
    pub fn sample(&self, u: f64) -> Result<usize, TreeError> {
        if !(self.total() > 0.0) {
            return Err(TreeError::ZeroTotal);
        }
        Ok(self.sample_unchecked(u))
    }

    #[inline]
    pub(crate) fn sample_unchecked(&self, u: f64) -> usize {
        let mut target = u * self.total();
        let mut node = 1;
        while node < self.width {
            let left = self.nodes[2 * node];
            let right = self.nodes[2 * node + 1];
            // rounding can push target past the subtree total; never step into an empty subtree
            if (target < left && left > 0.0) || right <= 0.0 {
                node *= 2;
            } else {
                target -= left;
                node = 2 * node + 1;
            }
        }
        node - self.width
    }

    fn check_index(&self, i: usize) -> Result<(), TreeError> {
        if i >= self.capacity {
            return Err(TreeError::IndexOutOfRange {
                index: i,
                capacity: self.capacity,
            });
        }
        Ok(())
    }
}

/// Plain weight vector with linear-scan sampling.
#[derive(Debug, Clone)]
pub struct FlatWeights {
    weights: Vec<f64>,
}

impl FlatWeights {
    pub fn build(weights: &[f64]) -> Result<Self, TreeError> {
        if weights.is_empty() {
            return Err(TreeError::Empty);
        }
        for (i, &w) in weights.iter().enumerate() {
            check_weight(i, w)?;
        }
        Ok(FlatWeights {
            weights: weights.to_vec(),
        })
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn sample(&self, u: f64) -> Result<usize, TreeError> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(TreeError::ZeroTotal);
        }
        Ok(self.scan(u * total))
    }

    #[inline]
    fn scan(&self, target: f64) -> usize {
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last_positive = i;
                if target < acc {
                    return i;
                }
            }
        }
        last_positive
    }
}

/// Candidate weights behind the self-avoiding walk; tree or flat per model density.
#[derive(Debug, Clone)]
pub(crate) enum CandidateStore {
    Tree(WeightTree),
    Flat { flat: FlatWeights, total: f64 },
}

impl CandidateStore {
    /// Tree-backed when the average degree is below `M / 4`.
    pub(crate) fn for_model(num_spins: usize, mean_degree: f64) -> Self {
        if mean_degree < num_spins as f64 / 4.0 {
            CandidateStore::Tree(WeightTree::build(&vec![0.0; num_spins]).expect("non-empty"))
        } else {
            CandidateStore::Flat {
                flat: FlatWeights {
                    weights: vec![0.0; num_spins],
                },
                total: 0.0,
            }
        }
    }

    pub(crate) fn reset(&mut self, weights: impl Iterator<Item = f64>) {
        match self {
            CandidateStore::Tree(t) => t.reset(weights),
            CandidateStore::Flat { flat, total } => {
                for (slot, v) in flat.weights.iter_mut().zip(weights) {
                    *slot = v;
                }
                *total = flat.total();
            }
        }
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, w: f64) {
        match self {
            CandidateStore::Tree(t) => t.set(i, w),
            CandidateStore::Flat { flat, .. } => flat.weights[i] = w,
        }
    }

    /// Recomputes the flat total after a batch of `set` calls.
    #[inline]
    pub(crate) fn commit(&mut self) {
        if let CandidateStore::Flat { flat, total } = self {
            *total = flat.total();
        }
    }

    #[cfg(test)]
    pub(crate) fn get(&self, i: usize) -> f64 {
        match self {
            CandidateStore::Tree(t) => t.leaf(i),
            CandidateStore::Flat { flat, .. } => flat.weights[i],
        }
    }

    #[inline]
    pub(crate) fn total(&self) -> f64 {
        match self {
            CandidateStore::Tree(t) => t.total(),
            CandidateStore::Flat { total, .. } => *total,
        }
    }

    #[inline]
    pub(crate) fn sample(&self, u: f64) -> usize {
        match self {
            CandidateStore::Tree(t) => t.sample_unchecked(u),
            CandidateStore::Flat { flat, total } => flat.scan(u * *total),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_totals() {
        assert_eq!(WeightTree::build(&[1.0, 2.0, 3.0, 4.0]).unwrap().total(), 10.0);
        assert_eq!(WeightTree::build(&[0.0, 0.0, 5.0]).unwrap().total(), 5.0);
        assert_eq!(WeightTree::build(&[7.0]).unwrap().total(), 7.0);
        assert_eq!(WeightTree::build(&[]).unwrap_err(), TreeError::Empty);
        assert!(WeightTree::build(&[1.0, -1.0]).is_err());
        assert!(WeightTree::build(&[f64::NAN]).is_err());
        assert!(WeightTree::build(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn sample_examples() {
        let t = WeightTree::build(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.sample(0.05).unwrap(), 0);
        assert_eq!(t.sample(0.95).unwrap(), 3);
        assert_eq!(t.sample(0.1).unwrap(), 1);
        assert_eq!(t.sample(0.0).unwrap(), 0);
        let single = WeightTree::build(&[7.0]).unwrap();
        assert_eq!(single.sample(0.99).unwrap(), 0);
        let zero = WeightTree::build(&[0.0, 0.0]).unwrap();
        assert_eq!(zero.sample(0.5), Err(TreeError::ZeroTotal));
    }

    #[test]
    fn update_examples() {
        let mut t = WeightTree::build(&[1.0, 1.0]).unwrap();
        t.update(0, 3.0).unwrap();
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.sample(0.74).unwrap(), 0);
        assert_eq!(t.sample(0.75).unwrap(), 1);
        t.update(0, 0.0).unwrap();
        for k in 0..100 {
            assert_eq!(t.sample(k as f64 / 100.0).unwrap(), 1);
        }
        assert!(t.update(2, 1.0).is_err());
        assert!(t.update(0, -0.5).is_err());
    }

    #[test]
    fn get_examples() {
        let mut t = WeightTree::build(&[1.0, 2.0]).unwrap();
        assert_eq!(t.get(1).unwrap(), 2.0);
        t.update(1, 0.0).unwrap();
        assert_eq!(t.get(1).unwrap(), 0.0);
        assert!(t.get(2).is_err());
    }

    #[test]
    fn trailing_zero_leaves_are_skipped_at_u_near_one() {
        let t = WeightTree::build(&[0.3, 0.0, 0.0, 0.1, 0.0]).unwrap();
        assert_eq!(t.sample(0.999_999_999_999).unwrap(), 3);
        let f = FlatWeights::build(&[0.3, 0.0, 0.0, 0.1, 0.0]).unwrap();
        assert_eq!(f.sample(0.999_999_999_999).unwrap(), 3);
    }

    #[test]
    fn candidate_store_modes_agree() {
        let w = [0.5, 0.0, 2.0, 1.5, 0.25];
        let mut tree = CandidateStore::for_model(5, 0.0);
        let mut flat = CandidateStore::for_model(5, 5.0);
        assert!(matches!(tree, CandidateStore::Tree(_)));
        assert!(matches!(flat, CandidateStore::Flat { .. }));
        tree.reset(w.iter().copied());
        flat.reset(w.iter().copied());
        for store in [&mut tree, &mut flat] {
            store.set(2, 0.0);
            store.set(1, 1.0);
            store.commit();
        }
        assert_eq!(tree.total(), flat.total());
        for k in 0..1000 {
            let u = k as f64 / 1000.0;
            assert_eq!(tree.sample(u), flat.sample(u));
        }
        assert_eq!(tree.get(1), 1.0);
        assert_eq!(flat.get(2), 0.0);
    }

    #[test]
    fn periodic_rebuild_keeps_sums_exact() {
        let mut t = WeightTree::build(&[0.0; 3]).unwrap();
        for k in 0..(REBUILD_INTERVAL as usize + 10) {
            t.set(k % 3, (k % 7) as f64 * 0.1);
        }
        let leaves: f64 = (0..3).map(|i| t.get(i).unwrap()).sum();
        assert!((t.total() - leaves).abs() <= 1e-12);
    }
}
