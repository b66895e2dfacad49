//! Correctness suites run by `sardonics verify`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::HarnessError;
use crate::baseline::{BaselineChain, BaselineKind, ScanOrder};
use crate::model::{make_bipartite_rbm, make_complete, random_state, CouplingSpec, IsingModel, WeightSource};
use crate::oracle::{
    effective_vs_marginal_alpha, exact_distribution, exact_random_scan_kernel,
    exact_sardonics_kernel_with, exact_swendsen_wang_kernel, inverse_cdf, marginal_balance_residual,
    pathwise_balance_residual, stationarity_residual, tv_distance, DensityRoute, LogRatioFn,
};
use crate::sampler::{SardonicsChain, Sampler};
use crate::saw::KernelParams;
use crate::weight_tree::WeightTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    /// Passing means `measured <= tolerance`, except for p-values where it is `>=`.
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn at_most(&mut self, name: impl Into<String>, measured: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        });
    }

    fn at_least(&mut self, name: impl Into<String>, measured: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.into(),
            measured,
            tolerance,
            passed: measured >= tolerance,
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: measured {:e}, tolerance {:e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

/// Small frustrated model: all pairs coupled with Gaussian weights.
fn frustrated(m: usize, seed: u64) -> Result<IsingModel, HarnessError> {
    Ok(make_complete(m, CouplingSpec::Gaussian(1.0), CouplingSpec::Gaussian(0.5), 1.0, seed)?)
}

fn balance_suite(report: &mut VerifyReport, log_ratio: &LogRatioFn) -> Result<(), HarnessError> {
    let (mut pathwise, mut marginal, mut routes) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..5 {
        let model = frustrated(6, seed)?;
        let pi = exact_distribution(&model)?;
        for gamma in [0.0, 0.5, 1.0] {
            let params = KernelParams::single(2, gamma);
            let k = exact_sardonics_kernel_with(&model, &params, DensityRoute::Implementation, log_ratio)?;
            let dense = exact_sardonics_kernel_with(&model, &params, DensityRoute::Dense, log_ratio)?;
            pathwise = pathwise.max(pathwise_balance_residual(&k, &pi));
            marginal = marginal.max(marginal_balance_residual(&k.marginal, &pi));
            for (a, b) in k.marginal.iter().zip(&dense.marginal) {
                routes = routes.max((a - b).abs());
            }
        }
    }
    report.at_most("pathwise detailed balance (M=6, k=2)", pathwise, 1e-10);
    report.at_most("marginal detailed balance (M=6, k=2)", marginal, 1e-9);
    report.at_most("walker vs dense kernel", routes, 1e-12);
    Ok(())
}

fn alpha_suite(report: &mut VerifyReport) -> Result<(), HarnessError> {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..3 {
        let model = frustrated(5, 100 + seed)?;
        for x in 0..32usize {
            for y in 0..32usize {
                if (x ^ y).count_ones() != 3 {
                    continue;
                }
                let x0 = crate::model::SpinState::from_index(x, 5);
                let x1 = crate::model::SpinState::from_index(y, 5);
                for gamma in [0.5, 1.0] {
                    let (eff, marg) = effective_vs_marginal_alpha(&model, &x0, &x1, 3, gamma)?;
                    worst = worst.max(eff - marg);
                }
            }
        }
    }
    report.at_most("effective vs marginal acceptance (M=5, k=3)", worst, 1e-12);
    Ok(())
}

fn baseline_kernel_suite(report: &mut VerifyReport) -> Result<(), HarnessError> {
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let model = frustrated(5, 200 + seed)?;
        let pi = exact_distribution(&model)?;
        worst = worst.max(stationarity_residual(&exact_random_scan_kernel(&model)?, &pi));
        worst = worst.max(stationarity_residual(&exact_swendsen_wang_kernel(&model)?, &pi));
    }
    report.at_most("exact baseline kernels leave pi invariant", worst, 1e-12);
    Ok(())
}

/// Random build/update/sample scripts against a linear-scan shadow array.
pub fn weight_tree_mismatches(scripts: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..scripts {
        let n = rng.random_range(1..40);
        let mut shadow: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() * 10.0 })
            .collect();
        let mut tree = WeightTree::build(&shadow).expect("non-negative weights");
        for _ in 0..rng.random_range(1..60) {
            if rng.random_bool(0.5) {
                let i = rng.random_range(0..n);
                let w = if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() * 10.0 };
                tree.update(i, w).expect("index in range");
                shadow[i] = w;
            } else {
                let u: f64 = rng.random();
                if tree.sample(u).ok() != inverse_cdf(&shadow, u) {
                    mismatches += 1;
                }
            }
        }
    }
    mismatches
}

/// Chi-square p-value of tree draws from weights `[1, 2, 3, 4]`.
pub fn weight_tree_chi_square(draws: usize, seed: u64) -> f64 {
    let tree = WeightTree::build(&[1.0, 2.0, 3.0, 4.0]).expect("valid weights");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[tree.sample(rng.random()).expect("positive total")] += 1;
    }
    let stat: f64 = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let expected = draws as f64 * (i + 1) as f64 / 10.0;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    1.0 - ChiSquared::new(3.0).expect("positive dof").cdf(stat)
}

fn stationarity_suite(report: &mut VerifyReport, steps: usize) -> Result<(), HarnessError> {
    let model = frustrated(8, 7)?;
    let rbm = make_bipartite_rbm(4, 4, &WeightSource::Gaussian { scale: 1.0 }, 1.0, 7)?;
    let params = KernelParams {
        k_l: 1,
        k_u: 3,
        gamma_low: 0.5,
        gamma_high: 1.0,
        p_ll: 0.4,
        p_hl: 0.3,
        p_lh: 0.3,
        segments: 2,
    };
    let mut runs: Vec<(&str, &IsingModel, Box<dyn Sampler + '_>)> = vec![
        ("sardonics", &model, Box::new(SardonicsChain::new(&model, random_state(8, 1), &params)?)),
        (
            "gibbs",
            &model,
            Box::new(BaselineChain::new(&model, BaselineKind::Gibbs(ScanOrder::Systematic), random_state(8, 1))?),
        ),
        (
            "swendsen-wang",
            &model,
            Box::new(BaselineChain::new(&model, BaselineKind::SwendsenWang, random_state(8, 1))?),
        ),
        (
            "block-gibbs",
            &rbm,
            Box::new(BaselineChain::new(&rbm, BaselineKind::BlockGibbs, random_state(8, 1))?),
        ),
    ];
    for (i, (name, m, sampler)) in runs.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
        let mut counts = vec![0u64; 256];
        for _ in 0..steps {
            sampler.step(&mut rng);
            counts[sampler.state().to_index()] += 1;
        }
        let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
        let tv = tv_distance(&empirical, &exact_distribution(m)?)?;
        report.at_most(format!("{name} stationarity TV ({steps} steps)"), tv, 0.02);
    }
    Ok(())
}

/// Runs the suites with the given acceptance log-ratio in the enumerated
/// kernels. Quick: detailed balance, the acceptance inequality, exact
/// baseline kernels and the weight-tree oracle. Full adds sampled
/// stationarity runs.
pub fn verify(level: VerifyLevel, log_ratio: &LogRatioFn) -> Result<VerifyReport, HarnessError> {
    let mut report = VerifyReport::default();
    balance_suite(&mut report, log_ratio)?;
    alpha_suite(&mut report)?;
    baseline_kernel_suite(&mut report)?;
    report.at_most(
        "weight tree vs shadow array (1000 scripts)",
        weight_tree_mismatches(1000, 11) as f64,
        0.0,
    );
    report.at_least("weight tree chi-square p-value", weight_tree_chi_square(100_000, 12), 0.001);
    if level == VerifyLevel::Full {
        stationarity_suite(&mut report, 1_000_000)?;
    }
    Ok(report)
}

pub fn cmd_verify(level: VerifyLevel) -> Result<VerifyReport, HarnessError> {
    verify(level, &crate::saw::log_acceptance_ratio)
}
