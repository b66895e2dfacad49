//! Self-avoiding walk engine shared by sampling and density evaluation.
//!
//! The walker owns a working state, its energy, and the flip-energy cache
//! `delta[j] = E(F(u, j)) - E(u)`. Two candidate stores hold
//! `exp(-γ (delta[j] - reference))` for the low and high bias levels, so one
//! walk yields its log-density under both levels at once. Walked indices are
//! zeroed in the stores for the rest of that walk.

use rand::Rng;

use crate::model::{IsingModel, SpinState};
use crate::weight_tree::CandidateStore;

/// Largest exponent allowed in a stored weight before re-referencing.
const MAX_EXPONENT: f64 = 500.0;
const MIN_TOTAL: f64 = 1e-250;
const MAX_TOTAL: f64 = 1e250;

pub(crate) enum Step<'a, R: ?Sized> {
    Sample { len: usize, level: usize, rng: &'a mut R },
    Replay(&'a [usize]),
}

#[derive(Debug, Clone)]
pub(crate) struct Walker<'m> {
    model: &'m IsingModel,
    state: SpinState,
    energy: f64,
    delta: Vec<f64>,
    in_walk: Vec<bool>,
    stores: [CandidateStore; 2],
    gammas: [f64; 2],
    references: [f64; 2],
    stores_valid: bool,
}

impl<'m> Walker<'m> {
    /// `state` must already be checked against the model.
    pub(crate) fn new(model: &'m IsingModel, state: SpinState) -> Self {
        let m = model.num_spins();
        let store = CandidateStore::for_model(m, model.mean_degree());
        let mut w = Walker {
            model,
            state,
            energy: 0.0,
            delta: vec![0.0; m],
            in_walk: vec![false; m],
            stores: [store.clone(), store],
            gammas: [f64::NAN; 2],
            references: [0.0; 2],
            stores_valid: false,
        };
        w.resync();
        w
    }

    pub(crate) fn state(&self) -> &SpinState {
        &self.state
    }

    pub(crate) fn energy(&self) -> f64 {
        self.energy
    }

    /// Recomputes energy and the flip-energy cache from scratch.
    pub(crate) fn resync(&mut self) {
        self.energy = self.model.energy_unchecked(&self.state);
        for j in 0..self.delta.len() {
            self.delta[j] = self.model.flip_delta_unchecked(&self.state, j);
        }
        self.stores_valid = false;
    }

    pub(crate) fn set_gammas(&mut self, gammas: [f64; 2]) {
        if gammas != self.gammas {
            self.gammas = gammas;
            self.stores_valid = false;
        }
    }

    fn shared(&self) -> bool {
        self.gammas[0] == self.gammas[1]
    }

    fn levels(&self) -> usize {
        if self.shared() {
            1
        } else {
            2
        }
    }

    #[inline]
    fn exponent(&self, t: usize, j: usize) -> f64 {
        -self.gammas[t] * (self.delta[j] - self.references[t])
    }

    fn rebuild(&mut self, t: usize) {
        let reference = (0..self.delta.len())
            .filter(|&j| !self.in_walk[j])
            .map(|j| self.delta[j])
            .fold(f64::INFINITY, f64::min);
        self.references[t] = if reference.is_finite() { reference } else { 0.0 };
        let gamma = self.gammas[t];
        let (delta, in_walk, r) = (&self.delta, &self.in_walk, self.references[t]);
        self.stores[t].reset((0..delta.len()).map(|j| {
            if in_walk[j] {
                0.0
            } else {
                (-gamma * (delta[j] - r)).exp()
            }
        }));
    }

    fn ensure_stores(&mut self) {
        if !self.stores_valid {
            for t in 0..self.levels() {
                self.rebuild(t);
            }
            self.stores_valid = true;
        }
    }

    /// Writes the current weight of candidate `j` into every active store.
    #[inline]
    fn refresh(&mut self, j: usize, overflow: &mut [bool; 2]) {
        for t in 0..self.levels() {
            let e = self.exponent(t, j);
            if e > MAX_EXPONENT {
                overflow[t] = true;
            }
            self.stores[t].set(j, e.exp());
        }
    }

    /// Flips `l`, updating energy and the flip-energy cache of its neighbours.
    /// When `track` is set, neighbour weights in the stores are refreshed too.
    #[inline]
    fn flip(&mut self, l: usize, track: bool, overflow: &mut [bool; 2]) {
        self.energy += self.delta[l];
        self.delta[l] = -self.delta[l];
        self.state.flip(l);
        let sl = f64::from(self.state.get(l));
        for &(m, coupling) in self.model.neighbors(l) {
            self.delta[m] += 4.0 * coupling * f64::from(self.state.get(m)) * sl;
            if track && !self.in_walk[m] {
                self.refresh(m, overflow);
            }
        }
    }

    /// Applies flips outside any walk, keeping the cache and stores current.
    pub(crate) fn apply_flips(&mut self, flips: &[usize]) {
        let mut overflow = [false; 2];
        let track = self.stores_valid;
        for &l in flips {
            self.flip(l, track, &mut overflow);
            if track {
                self.refresh(l, &mut overflow);
            }
        }
        if track {
            for t in 0..self.levels() {
                self.stores[t].commit();
                if overflow[t] {
                    self.rebuild(t);
                }
            }
        }
    }

    /// Runs one self-avoiding walk from the current state, either sampling
    /// `len` flips at bias level `level` or replaying a given index sequence.
    /// Walked indices are appended to `path`. Returns the walk's log-density
    /// at the low and high bias levels.
    ///
    /// Replay requires distinct, in-range indices (checked by the caller).
    pub(crate) fn walk<R: Rng + ?Sized>(&mut self, mut step: Step<'_, R>, path: &mut Vec<usize>) -> [f64; 2] {
        self.ensure_stores();
        let levels = self.levels();
        let len = match &step {
            Step::Sample { len, .. } => *len,
            Step::Replay(p) => p.len(),
        };
        debug_assert!(len <= self.state.len());
        let start = path.len();
        let mut logp = [0.0f64; 2];
        for i in 0..len {
            for t in 0..levels {
                let total = self.stores[t].total();
                if !(MIN_TOTAL..=MAX_TOTAL).contains(&total) {
                    self.rebuild(t);
                }
            }
            let l = match &mut step {
                Step::Sample { level, rng, .. } => {
                    let t = if levels == 1 { 0 } else { *level };
                    let u: f64 = rng.random();
                    self.stores[t].sample(u)
                }
                Step::Replay(p) => p[i],
            };
            debug_assert!(!self.in_walk[l], "walk revisited index {l}");
            for (t, lp) in logp.iter_mut().enumerate().take(levels) {
                *lp += self.exponent(t, l) - self.stores[t].total().ln();
            }
            self.in_walk[l] = true;
            path.push(l);
            let mut overflow = [false; 2];
            for t in 0..levels {
                self.stores[t].set(l, 0.0);
            }
            self.flip(l, true, &mut overflow);
            for t in 0..levels {
                self.stores[t].commit();
                if overflow[t] {
                    self.rebuild(t);
                }
            }
        }
        // the walked indices become candidates again for the next walk
        let mut overflow = [false; 2];
        for idx in start..path.len() {
            self.in_walk[path[idx]] = false;
        }
        for idx in start..path.len() {
            let j = path[idx];
            self.refresh(j, &mut overflow);
        }
        for t in 0..levels {
            self.stores[t].commit();
            if overflow[t] {
                self.rebuild(t);
            }
        }
        if levels == 1 {
            logp[1] = logp[0];
        }
        logp
    }
}
