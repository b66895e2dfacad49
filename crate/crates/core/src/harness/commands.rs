use std::fmt::Write as _;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelSpec, SamplerSpec};
use super::{create_dir, read_text, write_file, HarnessError};
use crate::baseline::{gibbs_sweep, BaselineChain, BaselineKind, ScanOrder};
use crate::bayes_opt::{adapt, boltzmann_policy, AdaptResult, BoltzmannPolicy, ParamSpace};
use crate::diagnostics::{acf, write_acf_table, write_trace, AcfCurve, EnergyTrace};
use crate::model::{random_state, write_model, IsingModel, SpinState};
use crate::sampler::{run_sampler, SardonicsChain, Sampler};
use crate::saw::{StepRecord, TraceSink};

/// Keeps every `stride`-th transition, renumbering by `offset`.
struct Thinned {
    stride: usize,
    offset: usize,
    records: Vec<StepRecord>,
}

impl TraceSink for Thinned {
    fn record(&mut self, rec: &StepRecord) -> std::io::Result<()> {
        let step = rec.step + self.offset;
        if step % self.stride == 0 {
            self.records.push(StepRecord { step, ..*rec });
        }
        Ok(())
    }
}

pub struct AdaptArtifacts {
    pub seed: u64,
    pub result: AdaptResult,
    pub policy: BoltzmannPolicy,
}

/// One chain of one sampler.
pub struct SeedRun {
    pub sampler: String,
    pub seed: u64,
    /// Recorded transitions (every `stride`-th).
    pub records: Vec<StepRecord>,
    pub wall_secs: f64,
    /// Present for adaptive SARDONICS, whose trace starts with the adaptation chains.
    pub adaptation: Option<AdaptArtifacts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub sampler: String,
    pub seed: u64,
    pub steps: usize,
    pub recorded: usize,
    /// Over all recorded rows.
    pub acceptance_rate: f64,
    /// Over recorded rows after burn-in.
    pub mean_energy: f64,
    /// Over recorded rows after burn-in, up to the configured lag.
    pub acf_area: f64,
    /// The post-burn-in energy never changed; `acf_area` is then 0 and meaningless.
    pub zero_variance: bool,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerReport {
    pub name: String,
    pub seeds: Vec<SeedSummary>,
    /// Seed-averaged autocorrelation, lags `0..=max_lag`.
    pub mean_acf: Vec<f64>,
    pub mean_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub samplers: Vec<SamplerReport>,
}

pub type CompareReport = RunReport;

pub fn trace_file_name(sampler: &str, seed: u64) -> String {
    format!("{sampler}_seed{seed}.csv")
}

/// Trace labels; repeated sampler kinds get their position appended.
fn labels(samplers: &[SamplerSpec]) -> Vec<String> {
    samplers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let dup = samplers.iter().filter(|t| t.name() == s.name()).count() > 1;
            if dup {
                format!("{}-{i}", s.name())
            } else {
                s.name().to_string()
            }
        })
        .collect()
}

/// `random_state(M, seed)` followed by the configured warm-start sweeps.
pub fn initial_state(model: &IsingModel, config: &ExperimentConfig, seed: u64) -> Result<SpinState, HarnessError> {
    let mut state = random_state(model.num_spins(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    for _ in 0..config.warm_start_sweeps {
        gibbs_sweep(model, &mut state, ScanOrder::Systematic, &mut rng)?;
    }
    Ok(state)
}

/// Runs one sampler from [`initial_state`] with a generator seeded by `seed`.
pub fn run_seed(
    model: &IsingModel,
    spec: &SamplerSpec,
    label: &str,
    config: &ExperimentConfig,
    base: &Path,
    seed: u64,
) -> Result<SeedRun, HarnessError> {
    let m = model.num_spins();
    let initial = initial_state(model, config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sink = Thinned {
        stride: config.stride,
        offset: 0,
        records: Vec::with_capacity(config.steps / config.stride),
    };
    let start = Instant::now();
    let mut adaptation = None;
    let baseline = |kind| -> Result<Box<dyn Sampler + '_>, HarnessError> {
        Ok(Box::new(BaselineChain::new(model, kind, initial.clone())?))
    };
    match spec {
        SamplerSpec::Sardonics { params } => {
            let mut chain = SardonicsChain::new(model, initial.clone(), params)?;
            run_sampler(&mut chain, config.steps, &mut rng, &mut sink)?;
        }
        SamplerSpec::Gibbs { order } => {
            run_sampler(&mut *baseline(BaselineKind::Gibbs(*order))?, config.steps, &mut rng, &mut sink)?
        }
        SamplerSpec::BlockGibbs => {
            run_sampler(&mut *baseline(BaselineKind::BlockGibbs)?, config.steps, &mut rng, &mut sink)?
        }
        SamplerSpec::SwendsenWang => {
            run_sampler(&mut *baseline(BaselineKind::SwendsenWang)?, config.steps, &mut rng, &mut sink)?
        }
        SamplerSpec::SardonicsAdaptive { policy: Some(path) } => {
            let policy = BoltzmannPolicy::from_json(&read_text(&base.join(path))?)?;
            let mut chain = SardonicsChain::new(model, initial.clone(), &policy)?;
            run_sampler(&mut chain, config.steps, &mut rng, &mut sink)?;
        }
        SamplerSpec::SardonicsAdaptive { policy: None } => {
            let section = config
                .adapt
                .as_ref()
                .ok_or_else(|| HarnessError::Config("adaptive sampling needs an [adapt] section".into()))?;
            let space = ParamSpace::new(&section.bounds, m)?;
            let result = adapt(model, &space, &section.settings(seed), initial.clone())?;
            for entry in &result.log {
                for rec in &entry.trace {
                    sink.record(rec)?;
                }
                sink.offset += entry.trace.len();
            }
            let policy = boltzmann_policy(&result.surrogate, &space, section.policy_candidates, seed)?;
            {
                let mut chain = SardonicsChain::new(model, result.final_state.clone(), &policy)?;
                run_sampler(&mut chain, config.steps - section.total_steps(), &mut rng, &mut sink)?;
            }
            adaptation = Some(AdaptArtifacts { seed, result, policy });
        }
    }
    Ok(SeedRun {
        sampler: label.to_string(),
        seed,
        records: sink.records,
        wall_secs: start.elapsed().as_secs_f64(),
        adaptation,
    })
}

fn summarize(run: &SeedRun, config: &ExperimentConfig) -> Result<(SeedSummary, AcfCurve), HarnessError> {
    let mut trace = EnergyTrace::from(run.records.as_slice());
    trace.stride = config.stride;
    let acceptance_rate = trace.acceptance_rate().unwrap_or(0.0);
    let kept = trace.burn_in(config.burn_in)?;
    let curve = acf(&kept, config.max_lag)?;
    let mean_energy = kept.energies.iter().sum::<f64>() / kept.len() as f64;
    Ok((
        SeedSummary {
            sampler: run.sampler.clone(),
            seed: run.seed,
            steps: config.steps,
            recorded: run.records.len(),
            acceptance_rate,
            mean_energy,
            acf_area: curve.area(),
            zero_variance: curve.zero_variance,
            wall_secs: run.wall_secs,
        },
        curve,
    ))
}

fn write_trace_file(path: &Path, records: &[StepRecord]) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    write_trace(&mut out, records)?;
    std::io::Write::flush(&mut out)?;
    Ok(())
}

/// Writes the policy, the adaptation log, the reward trajectory and the
/// concatenated evaluation chains.
fn write_adapt_artifacts(dir: &Path, prefix: &str, art: &AdaptArtifacts) -> Result<(), HarnessError> {
    let seed = art.seed;
    write_file(
        &dir.join(format!("{prefix}policy_seed{seed}.json")),
        art.policy.to_json()?.as_bytes(),
    )?;
    write_file(
        &dir.join(format!("{prefix}adapt_log_seed{seed}.json")),
        serde_json::to_string_pretty(&art.result.log)?.as_bytes(),
    )?;
    let mut rewards = String::from("iteration,reward,best_so_far,acf_area,zero_variance\n");
    for e in &art.result.log {
        writeln!(
            rewards,
            "{},{},{},{},{}",
            e.iteration,
            e.reward,
            e.best_so_far,
            e.acf_area,
            u8::from(e.zero_variance)
        )
        .expect("writing to a String");
    }
    write_file(&dir.join(format!("{prefix}rewards_seed{seed}.csv")), rewards.as_bytes())?;
    let mut all = Vec::new();
    for e in &art.result.log {
        let offset = all.len();
        all.extend(e.trace.iter().map(|r| StepRecord {
            step: r.step + offset,
            ..*r
        }));
    }
    write_trace_file(&dir.join(format!("{prefix}adapt_trace_seed{seed}.csv")), &all)
}

fn prepare_output(config: &ExperimentConfig, base: &Path) -> Result<PathBuf, HarnessError> {
    let out = base.join(&config.out);
    create_dir(&out)?;
    write_file(&out.join("config.toml"), config.to_toml()?.as_bytes())?;
    Ok(out)
}

fn run_all(config: &ExperimentConfig, base: &Path) -> Result<RunReport, HarnessError> {
    if config.samplers.is_empty() {
        return Err(HarnessError::Config("no samplers configured".into()));
    }
    config.check()?;
    let model = config.model.build(base)?;
    let out = prepare_output(config, base)?;
    let mut samplers = Vec::new();
    for (spec, label) in config.samplers.iter().zip(labels(&config.samplers)) {
        let mut seeds = Vec::new();
        let mut sum = vec![0.0; config.max_lag + 1];
        for &seed in &config.seeds {
            let run = run_seed(&model, spec, &label, config, base, seed)?;
            write_trace_file(&out.join(trace_file_name(&label, seed)), &run.records)?;
            if let Some(art) = &run.adaptation {
                write_adapt_artifacts(&out, &format!("{label}_"), art)?;
            }
            let (summary, curve) = summarize(&run, config)?;
            for (s, v) in sum.iter_mut().zip(&curve.values) {
                *s += v;
            }
            seeds.push(summary);
        }
        let n = config.seeds.len() as f64;
        let mean_acf: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let mean_area = mean_acf[1..].iter().sum();
        samplers.push(SamplerReport {
            name: label,
            seeds,
            mean_acf,
            mean_area,
        });
    }
    let report = RunReport { samplers };
    write_file(&out.join("summary.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

/// Writes the model text file for `spec`.
pub fn cmd_generate(spec: &ModelSpec, base: &Path, out: &Path) -> Result<IsingModel, HarnessError> {
    let model = spec.build(base)?;
    write_file(out, write_model(&model).as_bytes())?;
    Ok(model)
}

/// One trace per sampler and seed, plus `summary.json`.
pub fn cmd_run(config: &ExperimentConfig, base: &Path) -> Result<RunReport, HarnessError> {
    run_all(config, base)
}

/// Adapts once per seed and writes policy, log, rewards and evaluation traces.
pub fn cmd_adapt(config: &ExperimentConfig, base: &Path) -> Result<Vec<AdaptArtifacts>, HarnessError> {
    let section = config
        .adapt
        .as_ref()
        .ok_or_else(|| HarnessError::Config("adapt needs an [adapt] section".into()))?;
    config.check()?;
    let model = config.model.build(base)?;
    let space = ParamSpace::new(&section.bounds, model.num_spins())?;
    let out = prepare_output(config, base)?;
    let mut all = Vec::new();
    for &seed in &config.seeds {
        let result = adapt(&model, &space, &section.settings(seed), initial_state(&model, config, seed)?)?;
        let policy = boltzmann_policy(&result.surrogate, &space, section.policy_candidates, seed)?;
        let art = AdaptArtifacts { seed, result, policy };
        write_adapt_artifacts(&out, "", &art)?;
        all.push(art);
    }
    Ok(all)
}

/// Runs at least two samplers and writes the seed-averaged ACF table.
pub fn cmd_compare(config: &ExperimentConfig, base: &Path) -> Result<CompareReport, HarnessError> {
    if config.samplers.len() < 2 {
        return Err(HarnessError::Config("compare needs at least two samplers".into()));
    }
    let report = run_all(config, base)?;
    let columns: Vec<(String, AcfCurve)> = report
        .samplers
        .iter()
        .map(|s| {
            (
                s.name.clone(),
                AcfCurve {
                    values: s.mean_acf.clone(),
                    zero_variance: s.seeds.iter().all(|x| x.zero_variance),
                },
            )
        })
        .collect();
    let mut table = Vec::new();
    write_acf_table(&mut table, &columns)?;
    write_file(&base.join(&config.out).join("acf_table.csv"), &table)?;
    Ok(report)
}
