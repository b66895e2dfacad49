//! Reference samplers: single-site heat bath, bipartite block heat bath, and
//! Swendsen-Wang cluster moves.
//!
//! External fields enter Swendsen-Wang through a ghost spin fixed at `+1`
//! with coupling `h_i` to site `i`. Its bond to `i` is only possible when
//! `h_i s_i > 0`, and the cluster containing it is never flipped.

use petgraph::unionfind::UnionFind;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::model::{IsingModel, ModelError, SpinState};
use crate::sampler::{Sampler, StepOutput};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("block Gibbs needs a model with a declared bipartition")]
    NoBipartition,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanOrder {
    #[default]
    Systematic,
    /// `M` sites drawn uniformly with replacement.
    Random,
}

/// `P(s_i = +1 | rest)` for local field `f`.
#[inline]
pub fn heat_bath_probability(beta: f64, field: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * beta * field).exp())
}

#[inline]
fn heat_bath_site<R: Rng + ?Sized>(model: &IsingModel, state: &mut SpinState, i: usize, rng: &mut R) {
    let f = model.local_field_unchecked(state, i);
    let p = heat_bath_probability(model.beta(), f);
    let u: f64 = rng.random();
    state.set(i, if u < p { 1 } else { -1 });
}

/// One sweep of `M` heat-bath site updates.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    model: &IsingModel,
    state: &mut SpinState,
    order: ScanOrder,
    rng: &mut R,
) -> Result<(), ModelError> {
    model.check_state(state)?;
    let m = model.num_spins();
    match order {
        ScanOrder::Systematic => {
            for i in 0..m {
                heat_bath_site(model, state, i, rng);
            }
        }
        ScanOrder::Random => {
            for _ in 0..m {
                let i = rng.random_range(0..m);
                heat_bath_site(model, state, i, rng);
            }
        }
    }
    Ok(())
}

/// Resamples the second layer given the first, then the first given the second.
pub fn block_gibbs_sweep<R: Rng + ?Sized>(
    model: &IsingModel,
    state: &mut SpinState,
    rng: &mut R,
) -> Result<(), BaselineError> {
    let split = model.bipartition().ok_or(BaselineError::NoBipartition)?;
    model.check_state(state)?;
    let m = model.num_spins();
    for range in [split..m, 0..split] {
        // Within a layer no site is a neighbour of another, so each draw
        // reads only the opposite layer.
        for i in range {
            heat_bath_site(model, state, i, rng);
        }
    }
    Ok(())
}

/// Bonds and clusters formed during one Swendsen-Wang update.
#[derive(Debug, Clone)]
pub struct ClusterState {
    /// One flag per model edge, in `model.edges()` order.
    pub bond_flags: Vec<bool>,
    /// One flag per spin: bonded to the ghost spin.
    pub ghost_bonds: Vec<bool>,
    /// Union-find forest over the spins, with the ghost at index `M`.
    pub forest: UnionFind<usize>,
    pub flipped: Vec<bool>,
}

impl ClusterState {
    /// Clusters containing at least one real spin.
    pub fn num_clusters(&self) -> usize {
        let n = self.flipped.len();
        let mut roots: Vec<usize> = (0..n).map(|i| self.forest.find(i)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }
}

/// One Swendsen-Wang update in place. Returns the bond configuration used.
pub fn swendsen_wang_step<R: Rng + ?Sized>(
    model: &IsingModel,
    state: &mut SpinState,
    rng: &mut R,
) -> Result<ClusterState, ModelError> {
    model.check_state(state)?;
    let m = model.num_spins();
    let beta = model.beta();
    let ghost = m;
    let mut forest = UnionFind::new(m + 1);
    let mut bond_flags = vec![false; model.edges().len()];
    for (e, flag) in model.edges().iter().zip(bond_flags.iter_mut()) {
        let agree = e.coupling * f64::from(state.get(e.i) * state.get(e.j)) > 0.0;
        if agree {
            let p = -(-2.0 * beta * e.coupling.abs()).exp_m1();
            if rng.random::<f64>() < p {
                *flag = true;
                forest.union(e.i, e.j);
            }
        }
    }
    let mut ghost_bonds = vec![false; m];
    for (i, &h) in model.fields().iter().enumerate() {
        if h * f64::from(state.get(i)) > 0.0 {
            let p = -(-2.0 * beta * h.abs()).exp_m1();
            if rng.random::<f64>() < p {
                ghost_bonds[i] = true;
                forest.union(i, ghost);
            }
        }
    }
    debug_assert!(bond_flags
        .iter()
        .zip(model.edges())
        .all(|(&b, e)| !b || e.coupling * f64::from(state.get(e.i) * state.get(e.j)) > 0.0));

    // One coin per cluster, drawn the first time the cluster is met in index order.
    const UNDECIDED: u8 = 2;
    let mut decision = vec![UNDECIDED; m + 1];
    decision[forest.find_mut(ghost)] = 0;
    let mut flipped = vec![false; m];
    for (i, f) in flipped.iter_mut().enumerate() {
        let root = forest.find_mut(i);
        if decision[root] == UNDECIDED {
            decision[root] = u8::from(rng.random_bool(0.5));
        }
        if decision[root] == 1 {
            *f = true;
            state.flip(i);
        }
    }
    Ok(ClusterState {
        bond_flags,
        ghost_bonds,
        forest,
        flipped,
    })
}

/// Which baseline kernel a [`BaselineChain`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Gibbs(ScanOrder),
    BlockGibbs,
    SwendsenWang,
}

/// A baseline kernel bound to a model, with its current state and energy.
#[derive(Debug, Clone)]
pub struct BaselineChain<'m> {
    model: &'m IsingModel,
    kind: BaselineKind,
    state: SpinState,
    energy: f64,
}

impl<'m> BaselineChain<'m> {
    pub fn new(model: &'m IsingModel, kind: BaselineKind, initial: SpinState) -> Result<Self, BaselineError> {
        model.check_state(&initial)?;
        if kind == BaselineKind::BlockGibbs && model.bipartition().is_none() {
            return Err(BaselineError::NoBipartition);
        }
        let energy = model.energy_unchecked(&initial);
        Ok(BaselineChain {
            model,
            kind,
            state: initial,
            energy,
        })
    }
}

impl Sampler for BaselineChain<'_> {
    fn step(&mut self, rng: &mut dyn RngCore) -> StepOutput {
        let checked = "state and model were validated at construction";
        match self.kind {
            BaselineKind::Gibbs(order) => gibbs_sweep(self.model, &mut self.state, order, rng).expect(checked),
            BaselineKind::BlockGibbs => block_gibbs_sweep(self.model, &mut self.state, rng).expect(checked),
            BaselineKind::SwendsenWang => {
                swendsen_wang_step(self.model, &mut self.state, rng).expect(checked);
            }
        }
        self.energy = self.model.energy_unchecked(&self.state);
        StepOutput {
            accepted: true,
            walk_length: 0,
        }
    }

    fn state(&self) -> &SpinState {
        &self.state
    }

    fn energy(&self) -> f64 {
        self.energy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_bipartite_rbm, Edge, WeightSource};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_spin() -> IsingModel {
        IsingModel::new(2, 1.0, vec![Edge { i: 0, j: 1, coupling: 1.0 }], vec![0.0; 2]).unwrap()
    }

    /// Closed-form two-spin ferromagnet: `π(++) = e^β / (2e^β + 2e^{-β})`.
    fn two_spin_pp(beta: f64) -> f64 {
        beta.exp() / (2.0 * beta.exp() + 2.0 * (-beta).exp())
    }

    #[test]
    fn heat_bath_limits() {
        assert_eq!(heat_bath_probability(1.0, 0.0), 0.5);
        assert!(heat_bath_probability(1e3, 1.0) > 1.0 - 1e-12);
        assert!(heat_bath_probability(1e3, -1.0) < 1e-12);
        let p = heat_bath_probability(2.0, 0.3);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn two_spin_frequencies() {
        let model = two_spin();
        let target = two_spin_pp(1.0);
        assert!((target - 0.44039).abs() < 1e-5);
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [BaselineKind::Gibbs(ScanOrder::Systematic), BaselineKind::SwendsenWang] {
            let mut chain = BaselineChain::new(&model, kind, SpinState::all_up(2)).unwrap();
            let mut hits = 0usize;
            for _ in 0..n {
                chain.step(&mut rng);
                hits += usize::from(chain.state().spins() == [1, 1]);
            }
            let freq = hits as f64 / n as f64;
            assert!((freq - target).abs() < 0.005, "{kind:?}: {freq}");
        }
    }

    #[test]
    fn block_gibbs_needs_bipartition() {
        let model = two_spin();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = SpinState::all_up(2);
        assert!(matches!(
            block_gibbs_sweep(&model, &mut s, &mut rng),
            Err(BaselineError::NoBipartition)
        ));
        assert!(BaselineChain::new(&model, BaselineKind::BlockGibbs, s).is_err());
    }

    #[test]
    fn block_gibbs_without_couplings_is_uniform() {
        let model = make_bipartite_rbm(2, 3, &WeightSource::Gaussian { scale: 0.0 }, 1.0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = SpinState::all_up(5);
        let mut ups = [0usize; 5];
        let n = 100_000;
        for _ in 0..n {
            block_gibbs_sweep(&model, &mut s, &mut rng).unwrap();
            for (i, u) in ups.iter_mut().enumerate() {
                *u += usize::from(s.get(i) == 1);
            }
        }
        for u in ups {
            assert!((u as f64 / n as f64 - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn sw_bonds_only_satisfied_edges() {
        // Frustrated triangle with a field on one site.
        let edges = vec![
            Edge { i: 0, j: 1, coupling: 1.0 },
            Edge { i: 1, j: 2, coupling: 1.0 },
            Edge { i: 0, j: 2, coupling: -1.0 },
        ];
        let model = IsingModel::new(3, 0.8, edges, vec![0.5, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = SpinState::all_up(3);
        for _ in 0..2000 {
            let before = s.clone();
            let cs = swendsen_wang_step(&model, &mut s, &mut rng).unwrap();
            for (b, e) in cs.bond_flags.iter().zip(model.edges()) {
                if *b {
                    assert!(e.coupling * f64::from(before.get(e.i) * before.get(e.j)) > 0.0);
                    // bonded spins share a cluster, so they flip together
                    assert_eq!(cs.flipped[e.i], cs.flipped[e.j]);
                }
            }
            for i in 0..3 {
                if cs.forest.equiv(i, 3) {
                    assert!(!cs.flipped[i], "ghost cluster must stay put");
                }
                if cs.ghost_bonds[i] {
                    assert!(model.fields()[i] * f64::from(before.get(i)) > 0.0);
                }
            }
            assert!(cs.num_clusters() >= 1);
        }
    }

    #[test]
    fn strong_bond_probability() {
        let p = -(-10.0f64).exp_m1();
        assert!((p - 0.999_954_6).abs() < 1e-7);
    }
}
