use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::gp::GpSurrogate;
use super::lhs::lhs_init;
use super::space::{ParamSpace, DIMS};
use super::BayesOptError;
use crate::saw::{KernelError, KernelParams, ParamSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCandidate {
    pub theta: Vec<f64>,
    pub params: KernelParams,
    /// Posterior mean reward at `theta`.
    pub mean_reward: f64,
    pub probability: f64,
}

/// Discrete distribution over kernel parameters with mass proportional to
/// `exp(μ(θ))`. Each transition of the sampling phase draws from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannPolicy {
    pub candidates: Vec<PolicyCandidate>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl BoltzmannPolicy {
    /// Builds the softmax of `mean_rewards` over `params`.
    pub fn from_rewards(
        thetas: Vec<Vec<f64>>,
        params: Vec<KernelParams>,
        mean_rewards: Vec<f64>,
    ) -> Result<Self, BayesOptError> {
        if thetas.is_empty() || thetas.len() != params.len() || params.len() != mean_rewards.len() {
            return Err(BayesOptError::InvalidPolicy("candidate lists empty or of unequal length".into()));
        }
        if mean_rewards.iter().any(|m| !m.is_finite()) {
            return Err(BayesOptError::InvalidPolicy("non-finite mean reward".into()));
        }
        let top = mean_rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = mean_rewards.iter().map(|m| (m - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        let candidates = thetas
            .into_iter()
            .zip(params)
            .zip(mean_rewards.into_iter().zip(weights))
            .map(|((theta, params), (mean_reward, w))| PolicyCandidate {
                theta,
                params,
                mean_reward,
                probability: w / total,
            })
            .collect();
        Self::from_candidates(candidates)
    }

    fn from_candidates(candidates: Vec<PolicyCandidate>) -> Result<Self, BayesOptError> {
        let mut cumulative = Vec::with_capacity(candidates.len());
        let mut acc = 0.0;
        for c in &candidates {
            if !(c.probability >= 0.0) {
                return Err(BayesOptError::InvalidPolicy(format!("probability {}", c.probability)));
            }
            acc += c.probability;
            cumulative.push(acc);
        }
        if candidates.is_empty() || (acc - 1.0).abs() > 1e-9 {
            return Err(BayesOptError::InvalidPolicy(format!("probabilities sum to {acc}")));
        }
        Ok(BoltzmannPolicy { candidates, cumulative })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| c.probability).collect()
    }

    /// Candidate with the largest mass.
    pub fn mode(&self) -> &PolicyCandidate {
        self.candidates
            .iter()
            .reduce(|a, b| if b.probability > a.probability { b } else { a })
            .expect("policy is never empty")
    }

    pub fn to_json(&self) -> Result<String, BayesOptError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a saved policy and checks it is a distribution over valid kernels.
    pub fn from_json(text: &str) -> Result<Self, BayesOptError> {
        let raw: BoltzmannPolicy = serde_json::from_str(text)?;
        for c in &raw.candidates {
            if c.theta.len() != DIMS {
                return Err(BayesOptError::InvalidPolicy(format!("theta of length {}", c.theta.len())));
            }
        }
        Self::from_candidates(raw.candidates)
    }
}

impl ParamSource for BoltzmannPolicy {
    fn draw(&self, rng: &mut dyn RngCore) -> &KernelParams {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.candidates.len() - 1);
        &self.candidates[i].params
    }

    fn validate(&self, num_spins: usize) -> Result<(), KernelError> {
        self.candidates.iter().try_for_each(|c| c.params.validate(num_spins))
    }
}

/// Candidates are the surrogate's observed points followed by fresh Latin
/// hypercube points, `n_candidates` in total (at least all observations).
pub fn boltzmann_policy(
    surrogate: &GpSurrogate,
    space: &ParamSpace,
    n_candidates: usize,
    seed: u64,
) -> Result<BoltzmannPolicy, BayesOptError> {
    let mut thetas: Vec<Vec<f64>> = surrogate.inputs().to_vec();
    let fresh = n_candidates.saturating_sub(thetas.len());
    if fresh > 0 {
        thetas.extend(lhs_init(space, fresh.max(2), seed).into_iter().take(fresh).map(|t| t.to_vec()));
    }
    let params: Vec<KernelParams> = thetas.iter().map(|t| space.decode(t)).collect();
    let means: Vec<f64> = thetas.iter().map(|t| surrogate.predict(t).0).collect();
    BoltzmannPolicy::from_rewards(thetas, params, means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes_opt::gp::Hypers;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two(m0: f64, m1: f64) -> BoltzmannPolicy {
        let space = ParamSpace::for_model(10).unwrap();
        let t = vec![space.repair(&[0.2; DIMS]).to_vec(), space.repair(&[0.8; DIMS]).to_vec()];
        let p = t.iter().map(|x| space.decode(x)).collect();
        BoltzmannPolicy::from_rewards(t, p, vec![m0, m1]).unwrap()
    }

    #[test]
    fn softmax_masses() {
        let p = two(0.0, 3f64.ln());
        assert!((p.probabilities()[0] - 0.25).abs() < 1e-12);
        assert!((p.probabilities()[1] - 0.75).abs() < 1e-12);
        assert_eq!(two(-7.0, -7.0).probabilities(), vec![0.5, 0.5]);
    }

    #[test]
    fn prior_surrogate_gives_uniform_policy() {
        let space = ParamSpace::for_model(12).unwrap();
        let policy = boltzmann_policy(&GpSurrogate::empty(DIMS), &space, 9, 3).unwrap();
        assert_eq!(policy.candidates.len(), 9);
        for p in policy.probabilities() {
            assert!((p - 1.0 / 9.0).abs() < 1e-12);
        }
        assert!((policy.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn observed_points_come_first() {
        let space = ParamSpace::for_model(12).unwrap();
        let obs: Vec<Vec<f64>> = (0..4).map(|i| space.repair(&[i as f64 / 4.0; DIMS]).to_vec()).collect();
        let gp = GpSurrogate::condition(obs.clone(), vec![-3.0, -1.0, -2.0, -5.0], Hypers::isotropic(DIMS, 0.3, 0.1))
            .unwrap();
        let policy = boltzmann_policy(&gp, &space, 10, 1).unwrap();
        assert_eq!(policy.candidates.len(), 10);
        for (c, o) in policy.candidates.iter().zip(&obs) {
            assert_eq!(&c.theta, o);
        }
        for c in &policy.candidates {
            assert!(space.is_feasible(&c.params));
        }
        assert!((policy.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn draws_follow_masses() {
        let p = two(0.0, 3f64.ln());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 40_000;
        let high = (0..n).filter(|_| p.draw(&mut rng) == &p.candidates[1].params).count();
        assert!((high as f64 / n as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn json_reload_is_identical() {
        let p = two(-1.25, 0.4);
        let q = BoltzmannPolicy::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, q);
        assert!(BoltzmannPolicy::from_json(r#"{"candidates": []}"#).is_err());
    }
}
