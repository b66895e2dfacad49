use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::acquisition::acq_optimize;
use super::gp::{gp_fit, FitOptions, GpSurrogate, Hypers};
use super::lhs::lhs_init;
use super::space::{ParamSpace, DIMS};
use super::BayesOptError;
use crate::diagnostics::{acf, EnergyTrace};
use crate::model::{IsingModel, SpinState};
use crate::saw::{run_chain, KernelParams, StepRecord};

/// Upper limit on adaptation iterations; the surrogate costs O(I³).
pub const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptConfig {
    /// Total evaluations `I`, including the initial design.
    pub iterations: usize,
    /// Steps `L` of each evaluation chain.
    pub chain_steps: usize,
    /// Size of the Latin hypercube design.
    pub n_init: usize,
    pub max_lag: usize,
    /// Objective evaluations per acquisition search.
    pub acq_budget: usize,
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            iterations: 20,
            chain_steps: 1000,
            n_init: 5,
            max_lag: 100,
            acq_budget: 300,
            seed: 0,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<(), BayesOptError> {
        let err = |m: String| Err(BayesOptError::InvalidConfig(m));
        if self.n_init < 2 || self.iterations < self.n_init {
            return err(format!(
                "need iterations ({}) >= n_init ({}) >= 2",
                self.iterations, self.n_init
            ));
        }
        if self.iterations > MAX_ITERATIONS {
            return err(format!("iterations {} above the cap {MAX_ITERATIONS}", self.iterations));
        }
        if self.chain_steps <= self.max_lag {
            return err(format!(
                "chain_steps {} must exceed max_lag {}",
                self.chain_steps, self.max_lag
            ));
        }
        if self.acq_budget == 0 {
            return err("acq_budget must be positive".into());
        }
        Ok(())
    }
}

/// One evaluation of the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptEntry {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub params: KernelParams,
    /// `-(ACF area)`, or `-max_lag` for a chain whose energy never moved.
    pub reward: f64,
    pub acf_area: f64,
    pub zero_variance: bool,
    pub best_so_far: f64,
    /// Part of the initial design rather than chosen by the acquisition.
    pub from_design: bool,
    pub acceptance_rate: f64,
    /// Hyperparameters fitted after this observation, once there are two.
    pub hypers: Option<Hypers>,
    /// The evaluation chain, numbered from 1 within this evaluation.
    #[serde(skip)]
    pub trace: Vec<StepRecord>,
}

#[derive(Debug, Clone)]
pub struct AdaptResult {
    pub surrogate: GpSurrogate,
    pub log: Vec<AdaptEntry>,
    pub final_state: SpinState,
}

impl AdaptResult {
    pub fn best(&self) -> &AdaptEntry {
        self.log
            .iter()
            .reduce(|a, b| if b.reward > a.reward { b } else { a })
            .expect("adaptation log is never empty")
    }
}

/// Reward of an evaluation trace. A frozen chain scores `-max_lag`, the
/// area of a fully correlated trace.
fn reward_of(energies: &[f64], max_lag: usize) -> Result<(f64, f64, bool), BayesOptError> {
    let curve = acf(&EnergyTrace::new(energies.to_vec()), max_lag)?;
    let area = curve.area();
    let reward = if curve.zero_variance { -(max_lag as f64) } else { -area };
    Ok((reward, area, curve.zero_variance))
}

const INITIAL_HYPERS: (f64, f64) = (0.3, 0.1);

/// Runs the adaptation phase from `initial`. Each evaluation chain starts
/// where the previous one ended.
pub fn adapt(
    model: &IsingModel,
    space: &ParamSpace,
    config: &AdaptConfig,
    initial: SpinState,
) -> Result<AdaptResult, BayesOptError> {
    config.validate()?;
    if space.num_spins() != model.num_spins() {
        return Err(BayesOptError::InvalidSpace(format!(
            "space built for {} spins, model has {}",
            space.num_spins(),
            model.num_spins()
        )));
    }
    let design = lhs_init(space, config.n_init, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let options = FitOptions {
        standardize: true,
        ..FitOptions::default()
    };

    let mut state = initial;
    let mut inputs: Vec<Vec<f64>> = Vec::new();
    let mut rewards: Vec<f64> = Vec::new();
    let mut log = Vec::with_capacity(config.iterations);
    let mut surrogate = GpSurrogate::empty(DIMS);
    let mut hypers = Hypers::isotropic(DIMS, INITIAL_HYPERS.0, INITIAL_HYPERS.1);
    let mut best = f64::NEG_INFINITY;

    for i in 0..config.iterations {
        let from_design = i < config.n_init;
        let theta = if from_design {
            design[i]
        } else {
            acq_optimize(&surrogate, space, best, config.acq_budget)
        };
        let params = space.decode(&theta);
        let mut trace = Vec::with_capacity(config.chain_steps);
        let summary = run_chain(model, state, &params, config.chain_steps, &mut rng, &mut trace)?;
        state = summary.final_state;
        let energies: Vec<f64> = trace.iter().map(|r| r.energy).collect();
        let (reward, area, zero_variance) = reward_of(&energies, config.max_lag)?;
        best = best.max(reward);

        inputs.push(theta.to_vec());
        rewards.push(reward);
        let fitted = if inputs.len() >= 2 {
            surrogate = gp_fit(inputs.clone(), rewards.clone(), &hypers, &options)?;
            hypers = surrogate.hypers.clone();
            Some(hypers.clone())
        } else {
            None
        };
        log.push(AdaptEntry {
            iteration: i + 1,
            theta: theta.to_vec(),
            params,
            reward,
            acf_area: area,
            zero_variance,
            best_so_far: best,
            from_design,
            acceptance_rate: summary.acceptance_rate,
            hypers: fitted,
            trace,
        });
    }
    Ok(AdaptResult {
        surrogate,
        log,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_torus_2d, random_state, CouplingSpec};

    fn small() -> (IsingModel, ParamSpace, AdaptConfig) {
        let model = make_torus_2d(3, CouplingSpec::RandomSign, CouplingSpec::RandomSign, 1.0, 2).unwrap();
        let space = ParamSpace::for_model(9).unwrap();
        let config = AdaptConfig {
            iterations: 6,
            chain_steps: 200,
            n_init: 3,
            max_lag: 20,
            acq_budget: 60,
            seed: 5,
        };
        (model, space, config)
    }

    #[test]
    fn config_bounds() {
        let ok = AdaptConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            AdaptConfig { n_init: 1, ..ok.clone() },
            AdaptConfig { iterations: 4, ..ok.clone() },
            AdaptConfig { iterations: MAX_ITERATIONS + 1, ..ok.clone() },
            AdaptConfig { chain_steps: 100, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn log_bookkeeping() {
        let (model, space, config) = small();
        let out = adapt(&model, &space, &config, random_state(9, 1)).unwrap();
        assert_eq!(out.log.len(), 6);
        let mut best = f64::NEG_INFINITY;
        for (i, e) in out.log.iter().enumerate() {
            assert_eq!(e.from_design, i < 3);
            assert!(space.is_feasible(&e.params));
            assert_eq!(e.params, space.decode(&e.theta));
            let energies: Vec<f64> = e.trace.iter().map(|r| r.energy).collect();
            let (r, _, _) = reward_of(&energies, 20).unwrap();
            assert_eq!(r, e.reward);
            best = best.max(e.reward);
            assert_eq!(e.best_so_far, best);
            assert_eq!(e.hypers.is_some(), i >= 1);
        }
        assert_eq!(out.surrogate.len(), 6);
    }

    #[test]
    fn seeded_log_is_reproducible() {
        let (model, space, config) = small();
        let a = adapt(&model, &space, &config, random_state(9, 1)).unwrap();
        let b = adapt(&model, &space, &config, random_state(9, 1)).unwrap();
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn frozen_chain_scores_full_correlation() {
        assert_eq!(reward_of(&[2.0; 50], 10).unwrap(), (-10.0, 0.0, true));
    }
}
