//! TOML experiment configuration.
//!
//! ```toml
//! steps = 100000
//! seeds = [1, 2, 3]
//! out = "runs/torus16"
//!
//! [model]
//! kind = "torus-2d"
//! side = 16
//! coupling = "random-sign"
//! field = "random-sign"
//!
//! [[samplers]]
//! kind = "gibbs"
//!
//! [[samplers]]
//! kind = "sardonics-adaptive"
//!
//! [adapt]
//! iterations = 20
//! chain_steps = 1000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::baseline::ScanOrder;
use crate::bayes_opt::{AdaptConfig, SpaceBounds};
use crate::model::{
    make_bipartite_rbm, make_chimera, make_complete, make_cube_3d, make_torus_2d, parse_model,
    parse_rbm_weights, CouplingSpec, IsingModel, WeightSource,
};
use crate::saw::KernelParams;

fn default_beta() -> f64 {
    1.0
}

fn default_coupling() -> CouplingSpec {
    CouplingSpec::RandomSign
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(rename = "torus-2d")]
    Torus2d {
        side: usize,
        #[serde(default = "default_coupling")]
        coupling: CouplingSpec,
        #[serde(default = "default_coupling")]
        field: CouplingSpec,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        seed: u64,
    },
    #[serde(rename = "cube-3d")]
    Cube3d {
        side: usize,
        #[serde(default = "default_coupling")]
        coupling: CouplingSpec,
        #[serde(default = "default_coupling")]
        field: CouplingSpec,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        seed: u64,
    },
    Chimera {
        rows: usize,
        cols: usize,
        #[serde(default = "default_coupling")]
        coupling: CouplingSpec,
        #[serde(default = "default_coupling")]
        field: CouplingSpec,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        seed: u64,
    },
    Complete {
        spins: usize,
        #[serde(default = "default_coupling")]
        coupling: CouplingSpec,
        #[serde(default = "default_coupling")]
        field: CouplingSpec,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Gaussian weights unless `weights` names an RBM weight file.
    Rbm {
        visible: usize,
        hidden: usize,
        #[serde(default)]
        scale: Option<f64>,
        #[serde(default)]
        weights: Option<PathBuf>,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        seed: u64,
    },
    File {
        path: PathBuf,
    },
}

impl ModelSpec {
    /// Builds the model. Relative paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<IsingModel, HarnessError> {
        Ok(match self {
            ModelSpec::Torus2d { side, coupling, field, beta, seed } => {
                make_torus_2d(*side, *coupling, *field, *beta, *seed)?
            }
            ModelSpec::Cube3d { side, coupling, field, beta, seed } => {
                make_cube_3d(*side, *coupling, *field, *beta, *seed)?
            }
            ModelSpec::Chimera { rows, cols, coupling, field, beta, seed } => {
                make_chimera(*rows, *cols, *coupling, *field, *beta, *seed)?
            }
            ModelSpec::Complete { spins, coupling, field, beta, seed } => {
                make_complete(*spins, *coupling, *field, *beta, *seed)?
            }
            ModelSpec::Rbm { visible, hidden, scale, weights, beta, seed } => {
                let source = match (scale, weights) {
                    (_, Some(path)) => {
                        let text = super::read_text(&base.join(path))?;
                        WeightSource::External(parse_rbm_weights(&text)?)
                    }
                    (Some(scale), None) => WeightSource::Gaussian { scale: *scale },
                    (None, None) => {
                        return Err(HarnessError::Config("rbm model needs `scale` or `weights`".into()))
                    }
                };
                make_bipartite_rbm(*visible, *hidden, &source, *beta, *seed)?
            }
            ModelSpec::File { path } => parse_model(&super::read_text(&base.join(path))?)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplerSpec {
    Sardonics {
        params: KernelParams,
    },
    /// Adapts per seed unless `policy` names a saved policy file.
    SardonicsAdaptive {
        #[serde(default)]
        policy: Option<PathBuf>,
    },
    Gibbs {
        #[serde(default)]
        order: ScanOrder,
    },
    BlockGibbs,
    SwendsenWang,
}

impl SamplerSpec {
    /// File-name stem for traces.
    pub fn name(&self) -> &'static str {
        match self {
            SamplerSpec::Sardonics { .. } => "sardonics",
            SamplerSpec::SardonicsAdaptive { .. } => "sardonics-adaptive",
            SamplerSpec::Gibbs { order: ScanOrder::Systematic } => "gibbs",
            SamplerSpec::Gibbs { order: ScanOrder::Random } => "gibbs-random",
            SamplerSpec::BlockGibbs => "block-gibbs",
            SamplerSpec::SwendsenWang => "swendsen-wang",
        }
    }
}

/// Adaptation settings; the seed of each adaptation is the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptSection {
    pub iterations: usize,
    pub chain_steps: usize,
    pub n_init: usize,
    pub max_lag: usize,
    pub acq_budget: usize,
    /// Candidates in the Boltzmann policy, observations included.
    pub policy_candidates: usize,
    pub bounds: SpaceBounds,
}

impl Default for AdaptSection {
    fn default() -> Self {
        let d = AdaptConfig::default();
        AdaptSection {
            iterations: d.iterations,
            chain_steps: d.chain_steps,
            n_init: d.n_init,
            max_lag: d.max_lag,
            acq_budget: d.acq_budget,
            policy_candidates: 100,
            bounds: SpaceBounds::default(),
        }
    }
}

impl AdaptSection {
    pub fn settings(&self, seed: u64) -> AdaptConfig {
        AdaptConfig {
            iterations: self.iterations,
            chain_steps: self.chain_steps,
            n_init: self.n_init,
            max_lag: self.max_lag,
            acq_budget: self.acq_budget,
            seed,
        }
    }

    /// Steps spent in adaptation.
    pub fn total_steps(&self) -> usize {
        self.iterations * self.chain_steps
    }
}

fn default_steps() -> usize {
    100_000
}

fn default_stride() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_max_lag() -> usize {
    100
}

fn default_burn_in() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub samplers: Vec<SamplerSpec>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Keep every `stride`-th transition in trace files.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    /// Leading fraction of each trace discarded before statistics.
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Systematic Gibbs sweeps applied to the random initial state before
    /// any sampler starts; shared by all samplers of a seed.
    #[serde(default)]
    pub warm_start_sweeps: usize,
    #[serde(default)]
    pub adapt: Option<AdaptSection>,
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seeds: Vec<u64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub stride: Option<usize>,
    pub max_lag: Option<usize>,
    pub burn_in: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.check()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), HarnessError> {
        if !o.seeds.is_empty() {
            self.seeds = o.seeds.clone();
        }
        if let Some(v) = o.steps {
            self.steps = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.stride {
            self.stride = v;
        }
        if let Some(v) = o.max_lag {
            self.max_lag = v;
        }
        if let Some(v) = o.burn_in {
            self.burn_in = v;
        }
        self.check()
    }

    /// Structural checks that need no model.
    pub fn check(&self) -> Result<(), HarnessError> {
        let err = |m: &str| Err(HarnessError::Config(m.into()));
        if self.steps == 0 {
            return err("steps must be positive");
        }
        if self.stride == 0 {
            return err("stride must be positive");
        }
        if self.seeds.is_empty() {
            return err("at least one seed is required");
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return err("burn_in must lie in [0, 1)");
        }
        let needs_adapt = self
            .samplers
            .iter()
            .any(|s| matches!(s, SamplerSpec::SardonicsAdaptive { policy: None }));
        if needs_adapt && self.adapt.is_none() {
            return err("adaptive sampling without a policy file needs an [adapt] section");
        }
        if let Some(a) = &self.adapt {
            a.settings(0).validate()?;
            if needs_adapt && a.total_steps() > self.steps {
                return err("adaptation steps exceed the run length");
            }
            if a.policy_candidates == 0 {
                return err("policy_candidates must be positive");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
steps = 5000
seeds = [3, 4]
out = "o"

[model]
kind = "torus-2d"
side = 4

[[samplers]]
kind = "gibbs"

[[samplers]]
kind = "sardonics"
params.k_l = 1
params.k_u = 3
params.gamma_low = 0.9
params.gamma_high = 1.0
params.p_ll = 1.0
params.p_hl = 0.0
params.p_lh = 0.0
params.segments = 1

[[samplers]]
kind = "sardonics-adaptive"

[adapt]
iterations = 4
chain_steps = 200
n_init = 2
max_lag = 20
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(c.samplers.len(), 3);
        assert_eq!(c.stride, 1);
        assert_eq!(c.burn_in, 0.2);
        assert_eq!(c.adapt.as_ref().unwrap().n_init, 2);
        assert_eq!(c.adapt.as_ref().unwrap().bounds, SpaceBounds::default());
        let model = c.model.build(Path::new(".")).unwrap();
        assert_eq!(model.num_spins(), 16);
        let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        assert!(ExperimentConfig::from_toml(&EXAMPLE.replace("[adapt]", "[unused]")).is_err());
        assert!(ExperimentConfig::from_toml(&EXAMPLE.replace("steps = 5000", "steps = 500")).is_err());
        assert!(ExperimentConfig::from_toml(&EXAMPLE.replace("side = 4", "side = 4\ncolour = 1")).is_err());
        let mut c = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        let bad = Overrides {
            burn_in: Some(1.0),
            ..Overrides::default()
        };
        assert!(c.apply(&bad).is_err());
    }

    #[test]
    fn overrides_replace_keys() {
        let mut c = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        c.apply(&Overrides {
            seeds: vec![9],
            steps: Some(8000),
            stride: Some(5),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!((c.seeds.clone(), c.steps, c.stride), (vec![9], 8000, 5));
    }
}
