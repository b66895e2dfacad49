//! The SARDONICS move: energy-biased self-avoiding walks in state space with
//! pathwise Metropolis-Hastings acceptance.
//!
//! A walk of length `k` from `x0` flips `k` distinct bits. At each step the
//! next bit `l` is drawn among those not yet flipped with probability
//! proportional to `exp(-γ E(F(u, l)))`, where `u` is the current state.
//!
//! A move concatenates `N` segments. Each segment is a pair of walks whose
//! bias levels come from the mixture `(γ_L, γ_L)`, `(γ_H, γ_L)`, `(γ_L, γ_H)`
//! with weights `p_ll`, `p_hl`, `p_lh`, and whose lengths are drawn uniformly
//! from `k_l..=k_u`. The forward density of a realization is the product of
//! the segment mixture densities. The reverse realization visits the segments
//! in opposite order, each pair swapped and each walk reversed, and is scored
//! under the same mixture. Accepting with
//!
//! ```text
//! min(1, exp(-β (E(x1) - E(x0))) · q(reverse | x1) / q(forward | x0))
//! ```
//!
//! gives detailed balance on the joint space of end states and flip
//! sequences, hence on states. The uniform length factors are identical in
//! both directions and are left out.

mod chain;
mod params;
mod walker;

pub use chain::{run_chain, ChainSummary, ParamSource, StepRecord, TraceSink};
pub use params::{KernelParams, PairKind, MAX_SEGMENTS};
pub(crate) use params::log_sum_exp;

use rand::Rng;
use thiserror::Error;

use crate::model::{IsingModel, ModelError, SpinState};
use walker::{Step, Walker};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("walk visits index {0} twice")]
    RepeatedIndex(usize),
    #[error("walk length {len} exceeds {num_spins} spins")]
    WalkTooLong { len: usize, num_spins: usize },
    #[error("walk index {index} out of range for {num_spins} spins")]
    IndexOutOfRange { index: usize, num_spins: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trace sink failed: {0}")]
    Sink(#[from] std::io::Error),
}

/// An ordered sequence of distinct flip indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SawPath(Vec<usize>);

impl SawPath {
    pub fn new(indices: Vec<usize>) -> Result<Self, KernelError> {
        let mut seen = std::collections::HashSet::with_capacity(indices.len());
        for &i in &indices {
            if !seen.insert(i) {
                return Err(KernelError::RepeatedIndex(i));
            }
        }
        Ok(SawPath(indices))
    }

    pub(crate) fn from_walk(indices: Vec<usize>) -> Self {
        SawPath(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `R(σ)`: the same flips in opposite order.
    pub fn reversed(&self) -> SawPath {
        SawPath(self.0.iter().rev().copied().collect())
    }

    fn check(&self, num_spins: usize) -> Result<(), KernelError> {
        if self.0.len() > num_spins {
            return Err(KernelError::WalkTooLong {
                len: self.0.len(),
                num_spins,
            });
        }
        if let Some(&index) = self.0.iter().find(|&&i| i >= num_spins) {
            return Err(KernelError::IndexOutOfRange { index, num_spins });
        }
        Ok(())
    }
}

/// One pair of walks within a move.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    pub first: SawPath,
    pub second: SawPath,
}

impl Segment {
    /// The segment that undoes this one: second walk reversed, then first reversed.
    pub fn reversed(&self) -> Segment {
        Segment {
            first: self.second.reversed(),
            second: self.first.reversed(),
        }
    }

    pub fn flips(&self) -> impl Iterator<Item = usize> + '_ {
        self.first.0.iter().chain(&self.second.0).copied()
    }
}

/// A proposed move together with its forward and reverse log-densities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalRecord {
    pub segments: Vec<Segment>,
    pub proposed_state: SpinState,
    /// `E(x1) - E(x0)`.
    pub energy_delta: f64,
    pub log_forward: f64,
    pub log_reverse: f64,
}

impl ProposalRecord {
    /// Log of the Metropolis-Hastings ratio (before the `min(1, ·)`).
    pub fn log_ratio(&self, beta: f64) -> f64 {
        log_acceptance_ratio(beta, self.energy_delta, self.log_forward, self.log_reverse)
    }

    pub fn acceptance_probability(&self, beta: f64) -> f64 {
        self.log_ratio(beta).min(0.0).exp()
    }

    pub fn walk_length(&self) -> usize {
        self.segments
            .iter()
            .map(|s| s.first.len() + s.second.len())
            .sum()
    }
}

/// `-β ΔE + log q(reverse) - log q(forward)`.
#[inline]
pub fn log_acceptance_ratio(beta: f64, energy_delta: f64, log_forward: f64, log_reverse: f64) -> f64 {
    -beta * energy_delta + log_reverse - log_forward
}

/// Samples one walk of length `k` at bias `gamma` from `x0`. Returns the path,
/// the end state, and the log of the product of step probabilities.
pub fn sample_saw<R: Rng + ?Sized>(
    model: &IsingModel,
    x0: &SpinState,
    k: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<(SawPath, SpinState, f64), KernelError> {
    model.check_state(x0)?;
    if k > model.num_spins() || k == 0 {
        return Err(KernelError::WalkTooLong {
            len: k,
            num_spins: model.num_spins(),
        });
    }
    let mut walker = Walker::new(model, x0.clone());
    walker.set_gammas([gamma, gamma]);
    let mut path = Vec::with_capacity(k);
    let logp = walker.walk(Step::Sample { len: k, level: 0, rng }, &mut path);
    Ok((SawPath(path), walker.state().clone(), logp[0]))
}

/// `log f(x1, σ | x0)` for a fixed path at bias `gamma`.
pub fn saw_logprob(
    model: &IsingModel,
    x0: &SpinState,
    path: &SawPath,
    gamma: f64,
) -> Result<f64, KernelError> {
    model.check_state(x0)?;
    path.check(model.num_spins())?;
    let mut walker = Walker::new(model, x0.clone());
    walker.set_gammas([gamma, gamma]);
    let mut scratch = Vec::with_capacity(path.len());
    Ok(walker.walk::<dyn rand::RngCore>(Step::Replay(path.indices()), &mut scratch)[0])
}

/// Log mixture density of a walk pair from `x0` under `params`' bias levels
/// and mixture weights.
pub fn pair_log_mixture(
    model: &IsingModel,
    x0: &SpinState,
    pair: &Segment,
    params: &KernelParams,
) -> Result<f64, KernelError> {
    model.check_state(x0)?;
    pair.first.check(model.num_spins())?;
    pair.second.check(model.num_spins())?;
    let mut walker = Walker::new(model, x0.clone());
    walker.set_gammas(params.gammas());
    Ok(replay_segments(&mut walker, std::slice::from_ref(pair), params))
}

fn replay_segments(walker: &mut Walker<'_>, segments: &[Segment], params: &KernelParams) -> f64 {
    let mut scratch = Vec::new();
    let mut total = 0.0;
    for seg in segments {
        scratch.clear();
        let a = walker.walk::<dyn rand::RngCore>(Step::Replay(seg.first.indices()), &mut scratch);
        let b = walker.walk::<dyn rand::RngCore>(Step::Replay(seg.second.indices()), &mut scratch);
        total += params.mix(a, b);
    }
    total
}

/// Outcome of one transition, without the allocated path record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub walk_length: usize,
    pub log_ratio: f64,
}

/// A SARDONICS chain bound to one model.
#[derive(Debug, Clone)]
pub struct SardonicsSampler<'m> {
    model: &'m IsingModel,
    walker: Walker<'m>,
    segments: Vec<Segment>,
    path_buf: Vec<usize>,
    since_resync: usize,
}

/// Steps between full recomputations of the incremental energy cache.
const RESYNC_INTERVAL: usize = 1024;

impl<'m> SardonicsSampler<'m> {
    pub fn new(model: &'m IsingModel, initial: SpinState) -> Result<Self, KernelError> {
        model.check_state(&initial)?;
        Ok(SardonicsSampler {
            model,
            walker: Walker::new(model, initial),
            segments: Vec::new(),
            path_buf: Vec::new(),
            since_resync: 0,
        })
    }

    pub fn state(&self) -> &SpinState {
        self.walker.state()
    }

    /// Incrementally tracked energy of the current state.
    pub fn energy(&self) -> f64 {
        self.walker.energy()
    }

    /// Recomputes the energy and flip-energy cache from scratch.
    pub fn resync(&mut self) {
        self.walker.resync();
    }

    /// Draws a proposal, evaluates both directions, and accepts or rejects.
    /// `params` must have been validated against the model.
    pub fn step<R: Rng + ?Sized>(&mut self, params: &KernelParams, rng: &mut R) -> StepOutcome {
        let beta = self.model.beta();
        self.since_resync += 1;
        if self.since_resync >= RESYNC_INTERVAL {
            self.since_resync = 0;
            self.walker.resync();
        }
        self.walker.set_gammas(params.gammas());
        let e0 = self.walker.energy();
        self.segments.clear();
        let mut log_forward = 0.0;
        for _ in 0..params.segments {
            let kind = params.pick_kind(rng.random());
            let (a_level, b_level) = kind.levels();
            let k1 = rng.random_range(params.k_l..=params.k_u);
            let k2 = rng.random_range(params.k_l..=params.k_u);
            self.path_buf.clear();
            let a = self.walker.walk(
                Step::Sample { len: k1, level: a_level, rng: &mut *rng },
                &mut self.path_buf,
            );
            let first = SawPath::from_walk(self.path_buf.clone());
            self.path_buf.clear();
            let b = self.walker.walk(
                Step::Sample { len: k2, level: b_level, rng: &mut *rng },
                &mut self.path_buf,
            );
            let second = SawPath::from_walk(self.path_buf.clone());
            log_forward += params.mix(a, b);
            self.segments.push(Segment { first, second });
        }
        let e1 = self.walker.energy();

        // Scoring the reverse realization walks the state back to x0.
        let reversed: Vec<Segment> = self.segments.iter().rev().map(Segment::reversed).collect();
        let log_reverse = replay_segments(&mut self.walker, &reversed, params);

        let log_ratio = log_acceptance_ratio(beta, e1 - e0, log_forward, log_reverse);
        let u: f64 = rng.random();
        let accepted = u < log_ratio.min(0.0).exp();
        if accepted {
            let flips: Vec<usize> = self.segments.iter().flat_map(Segment::flips).collect();
            self.walker.apply_flips(&flips);
        }
        StepOutcome {
            accepted,
            walk_length: self.segments.iter().map(|s| s.first.len() + s.second.len()).sum(),
            log_ratio,
        }
    }

    /// Like [`SardonicsSampler::step`], also returning the full proposal.
    pub fn step_with_record<R: Rng + ?Sized>(
        &mut self,
        params: &KernelParams,
        rng: &mut R,
    ) -> (ProposalRecord, bool) {
        let x0 = self.walker.state().clone();
        let outcome = self.step(params, rng);
        let record = evaluate_proposal(self.model, &x0, &self.segments, params)
            .expect("sampled segments are valid");
        (record, outcome.accepted)
    }
}

/// Forward and reverse log-densities of a given realization from `x0`.
pub fn evaluate_proposal(
    model: &IsingModel,
    x0: &SpinState,
    segments: &[Segment],
    params: &KernelParams,
) -> Result<ProposalRecord, KernelError> {
    model.check_state(x0)?;
    for s in segments {
        s.first.check(model.num_spins())?;
        s.second.check(model.num_spins())?;
    }
    let mut walker = Walker::new(model, x0.clone());
    walker.set_gammas(params.gammas());
    let e0 = walker.energy();
    let log_forward = replay_segments(&mut walker, segments, params);
    let proposed_state = walker.state().clone();
    let energy_delta = walker.energy() - e0;
    let reversed: Vec<Segment> = segments.iter().rev().map(Segment::reversed).collect();
    let log_reverse = replay_segments(&mut walker, &reversed, params);
    Ok(ProposalRecord {
        segments: segments.to_vec(),
        proposed_state,
        energy_delta,
        log_forward,
        log_reverse,
    })
}

/// One SARDONICS transition from `state`. Returns the next state, the
/// proposal record, and whether it was accepted.
pub fn sardonics_step<R: Rng + ?Sized>(
    model: &IsingModel,
    state: &SpinState,
    params: &KernelParams,
    rng: &mut R,
) -> Result<(SpinState, ProposalRecord, bool), KernelError> {
    params.validate(model.num_spins())?;
    let mut sampler = SardonicsSampler::new(model, state.clone())?;
    let (record, accepted) = sampler.step_with_record(params, rng);
    Ok((sampler.state().clone(), record, accepted))
}
