//! Brute-force references for small models: the exact target, exact
//! transition matrices of every kernel, and the effective-versus-marginal
//! acceptance comparison.
//!
//! Transition matrices are row-major over state indices (`K[x * 2^M + y]` is
//! the probability of moving from `x` to `y`).

use std::collections::HashMap;

use thiserror::Error;

use crate::baseline::heat_bath_probability;
use crate::model::{IsingModel, SpinState};
use crate::saw::{
    evaluate_proposal, log_acceptance_ratio, log_sum_exp, saw_logprob, KernelError, KernelParams,
    SawPath, Segment,
};

/// Largest model the exact target is computed for.
pub const MAX_EXACT_SPINS: usize = 20;
/// Largest model a dense transition matrix is built for.
pub const MAX_KERNEL_SPINS: usize = 10;
/// Cap on enumerated realizations per kernel construction.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{num_spins} spins exceeds the enumeration limit of {limit}")]
    TooLarge { num_spins: usize, limit: usize },
    #[error("enumeration needs {needed} realizations, budget is {ENUMERATION_BUDGET}")]
    BudgetExceeded { needed: u64 },
    #[error("unsupported query: {0}")]
    Unsupported(String),
    #[error("vectors have lengths {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("vector sums to {0}, not 1")]
    NotNormalized(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn check_size(model: &IsingModel, limit: usize) -> Result<usize, OracleError> {
    let m = model.num_spins();
    if m > limit {
        return Err(OracleError::TooLarge { num_spins: m, limit });
    }
    Ok(1 << m)
}

/// `π(x) = exp(-βE(x)) / Z` over all `2^M` states, indexed as [`SpinState::to_index`].
pub fn exact_distribution(model: &IsingModel) -> Result<Vec<f64>, OracleError> {
    let n = check_size(model, MAX_EXACT_SPINS)?;
    let m = model.num_spins();
    let beta = model.beta();
    let logw: Vec<f64> = (0..n)
        .map(|x| -beta * model.energy_unchecked(&SpinState::from_index(x, m)))
        .collect();
    let log_z = log_sum_exp(logw.iter().copied());
    Ok(logw.into_iter().map(|l| (l - log_z).exp()).collect())
}

/// `log Z` accumulated in one streaming pass with a running maximum.
pub fn log_partition(model: &IsingModel) -> Result<f64, OracleError> {
    let n = check_size(model, MAX_EXACT_SPINS)?;
    let m = model.num_spins();
    let beta = model.beta();
    let (mut max, mut acc) = (f64::NEG_INFINITY, 0.0f64);
    for x in 0..n {
        let l = -beta * model.energy_unchecked(&SpinState::from_index(x, m));
        if l > max {
            acc = acc * (max - l).exp() + 1.0;
            max = l;
        } else {
            acc += (l - max).exp();
        }
    }
    Ok(max + acc.ln())
}

/// `(1/2) Σ |p_i - q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64, OracleError> {
    if p.len() != q.len() {
        return Err(OracleError::DimensionMismatch(p.len(), q.len()));
    }
    for v in [p, q] {
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(OracleError::NotNormalized(s));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Visit frequencies over state indices.
pub fn empirical_distribution<'a>(
    num_spins: usize,
    states: impl IntoIterator<Item = &'a SpinState>,
) -> Vec<f64> {
    let mut counts = vec![0u64; 1 << num_spins];
    let mut total = 0u64;
    for s in states {
        counts[s.to_index()] += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / total.max(1) as f64)
        .collect()
}

/// Linear-scan inverse CDF over a plain weight array: the first positive
/// weight whose running prefix sum exceeds `u · total`, or the last positive
/// weight if rounding leaves none. `None` when every weight is zero.
pub fn inverse_cdf(weights: &[f64], u: f64) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut prefix = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        prefix += w;
        last = Some(i);
        if target < prefix {
            return last;
        }
    }
    last
}

/// All ordered sequences of `k` distinct indices from `0..m`.
pub fn ordered_paths(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(m: usize, k: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                extend(m, k, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    if k <= m {
        extend(m, k, &mut vec![false; m], &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Step-by-step softmax over full energies; shares no code with the walker.
pub fn dense_saw_logprob(model: &IsingModel, x0: &SpinState, path: &[usize], gamma: f64) -> f64 {
    let mut u = x0.clone();
    let mut used = vec![false; u.len()];
    let mut lp = 0.0;
    for &l in path {
        let mut chosen = f64::NAN;
        let logits: Vec<f64> = (0..u.len())
            .filter(|&j| !used[j])
            .map(|j| {
                u.flip(j);
                let v = -gamma * model.energy_unchecked(&u);
                u.flip(j);
                if j == l {
                    chosen = v;
                }
                v
            })
            .collect();
        lp += chosen - log_sum_exp(logits.iter().copied());
        used[l] = true;
        u.flip(l);
    }
    lp
}

fn dense_pair_mixture(model: &IsingModel, x0: &SpinState, seg: &Segment, params: &KernelParams) -> f64 {
    let mid = x0.apply_flips(seg.first.indices()).expect("in range");
    let g = params.gammas();
    let first = g.map(|gamma| dense_saw_logprob(model, x0, seg.first.indices(), gamma));
    let second = g.map(|gamma| dense_saw_logprob(model, &mid, seg.second.indices(), gamma));
    let terms = [(params.p_ll, 0, 0), (params.p_hl, 1, 0), (params.p_lh, 0, 1)];
    log_sum_exp(
        terms
            .iter()
            .filter(|(p, ..)| *p > 0.0)
            .map(|&(p, a, b)| p.ln() + first[a] + second[b]),
    )
}

/// How path densities are computed while enumerating a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityRoute {
    /// The sampler's own incremental walker.
    Implementation,
    /// Dense softmax over full energies.
    Dense,
}

/// `log α` before the `min(0, ·)` given `(β, ΔE, log_forward, log_reverse)`.
pub type LogRatioFn = dyn Fn(f64, f64, f64, f64) -> f64;

/// Fully enumerated one-segment SARDONICS kernel.
#[derive(Debug, Clone)]
pub struct ExactSardonicsKernel {
    pub num_spins: usize,
    /// Marginal transition matrix, row-major.
    pub marginal: Vec<f64>,
    /// `K(x1, σ | x0)` for every accepted-path realization with nonzero mass,
    /// keyed by start state index and segment.
    pub joint: HashMap<(usize, Segment), f64>,
}

impl ExactSardonicsKernel {
    pub fn num_states(&self) -> usize {
        1 << self.num_spins
    }
}

/// Enumerates every segment realization of a one-segment, fixed-length kernel
/// (`k_l = k_u`, `N = 1`). Any mixture weights and bias levels are allowed.
pub fn exact_sardonics_kernel(
    model: &IsingModel,
    params: &KernelParams,
    route: DensityRoute,
) -> Result<ExactSardonicsKernel, OracleError> {
    exact_sardonics_kernel_with(model, params, route, &log_acceptance_ratio)
}

/// As [`exact_sardonics_kernel`] with a caller-supplied acceptance log-ratio.
pub fn exact_sardonics_kernel_with(
    model: &IsingModel,
    params: &KernelParams,
    route: DensityRoute,
    log_ratio: &LogRatioFn,
) -> Result<ExactSardonicsKernel, OracleError> {
    let n = check_size(model, MAX_KERNEL_SPINS)?;
    let m = model.num_spins();
    params.validate_reducible(m)?;
    if params.segments != 1 || params.k_l != params.k_u {
        return Err(OracleError::Unsupported(
            "exact enumeration needs one segment and a fixed walk length".into(),
        ));
    }
    let paths = ordered_paths(m, params.k_l);
    let needed = (n as u64).saturating_mul((paths.len() as u64).pow(2));
    if needed > ENUMERATION_BUDGET {
        return Err(OracleError::BudgetExceeded { needed });
    }
    let beta = model.beta();
    let mut marginal = vec![0.0; n * n];
    let mut joint = HashMap::new();
    for x in 0..n {
        let x0 = SpinState::from_index(x, m);
        let e0 = model.energy_unchecked(&x0);
        let mut stay = 1.0;
        for first in &paths {
            for second in &paths {
                let seg = Segment {
                    first: SawPath::new(first.clone())?,
                    second: SawPath::new(second.clone())?,
                };
                let (lf, lr, de, y) = match route {
                    DensityRoute::Implementation => {
                        let rec = evaluate_proposal(model, &x0, std::slice::from_ref(&seg), params)?;
                        (rec.log_forward, rec.log_reverse, rec.energy_delta, rec.proposed_state)
                    }
                    DensityRoute::Dense => {
                        let y = x0.apply_flips(&seg.flips().collect::<Vec<_>>()).expect("in range");
                        let lf = dense_pair_mixture(model, &x0, &seg, params);
                        let lr = dense_pair_mixture(model, &y, &seg.reversed(), params);
                        (lf, lr, model.energy_unchecked(&y) - e0, y)
                    }
                };
                let p = lf.exp() * log_ratio(beta, de, lf, lr).min(0.0).exp();
                if p > 0.0 {
                    marginal[x * n + y.to_index()] += p;
                    stay -= p;
                    joint.insert((x, seg), p);
                }
            }
        }
        marginal[x * n + x] += stay;
    }
    Ok(ExactSardonicsKernel {
        num_spins: m,
        marginal,
        joint,
    })
}

/// Largest `|π(x) K(y, σ | x) - π(y) K(x, R(σ) | y)|` over all realizations.
pub fn pathwise_balance_residual(kernel: &ExactSardonicsKernel, pi: &[f64]) -> f64 {
    let m = kernel.num_spins;
    let mut worst = 0.0f64;
    for ((x, seg), &p) in &kernel.joint {
        let flips: Vec<usize> = seg.flips().collect();
        let y = SpinState::from_index(*x, m).apply_flips(&flips).expect("in range").to_index();
        let q = kernel.joint.get(&(y, seg.reversed())).copied().unwrap_or(0.0);
        worst = worst.max((pi[*x] * p - pi[y] * q).abs());
    }
    worst
}

/// Largest `|π(x) K(y|x) - π(y) K(x|y)|` over all pairs.
pub fn marginal_balance_residual(kernel: &[f64], pi: &[f64]) -> f64 {
    let n = pi.len();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in x + 1..n {
            worst = worst.max((pi[x] * kernel[x * n + y] - pi[y] * kernel[y * n + x]).abs());
        }
    }
    worst
}

/// `‖πK - π‖₁`.
pub fn stationarity_residual(kernel: &[f64], pi: &[f64]) -> f64 {
    let n = pi.len();
    (0..n)
        .map(|y| {
            let flow: f64 = (0..n).map(|x| pi[x] * kernel[x * n + y]).sum();
            (flow - pi[y]).abs()
        })
        .sum()
}

/// Largest `|Σ_y K(y|x) - 1|`.
pub fn row_sum_residual(kernel: &[f64], n: usize) -> f64 {
    kernel
        .chunks(n)
        .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

fn apply_site(model: &IsingModel, dist: &[f64], site: usize, scratch: &mut [f64]) {
    let m = model.num_spins();
    scratch.iter_mut().for_each(|v| *v = 0.0);
    for (x, &p) in dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let s = SpinState::from_index(x, m);
        let up = heat_bath_probability(model.beta(), model.local_field_unchecked(&s, site));
        let bit = 1usize << site;
        scratch[x | bit] += p * up;
        scratch[x & !bit] += p * (1.0 - up);
    }
}

/// Exact matrix of a fixed sequence of heat-bath site updates (a systematic
/// sweep, or a block-Gibbs sweep in layer order).
pub fn exact_site_sequence_kernel(model: &IsingModel, order: &[usize]) -> Result<Vec<f64>, OracleError> {
    let n = check_size(model, MAX_KERNEL_SPINS)?;
    let mut kernel = vec![0.0; n * n];
    let mut dist = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for x in 0..n {
        dist.iter_mut().for_each(|v| *v = 0.0);
        dist[x] = 1.0;
        for &site in order {
            apply_site(model, &dist, site, &mut scratch);
            std::mem::swap(&mut dist, &mut scratch);
        }
        kernel[x * n..(x + 1) * n].copy_from_slice(&dist);
    }
    Ok(kernel)
}

/// Exact matrix of a random-scan sweep: `M` uniformly chosen site updates.
pub fn exact_random_scan_kernel(model: &IsingModel) -> Result<Vec<f64>, OracleError> {
    let n = check_size(model, MAX_KERNEL_SPINS)?;
    let m = model.num_spins();
    let mut kernel = vec![0.0; n * n];
    let mut dist = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for x in 0..n {
        dist.iter_mut().for_each(|v| *v = 0.0);
        dist[x] = 1.0;
        for _ in 0..m {
            acc.iter_mut().for_each(|v| *v = 0.0);
            for site in 0..m {
                apply_site(model, &dist, site, &mut scratch);
                for (a, s) in acc.iter_mut().zip(&scratch) {
                    *a += s / m as f64;
                }
            }
            std::mem::swap(&mut dist, &mut acc);
        }
        kernel[x * n..(x + 1) * n].copy_from_slice(&dist);
    }
    Ok(kernel)
}

/// Exact Swendsen-Wang matrix by enumerating every bond subset of the
/// satisfied edges (ghost edges included) and every cluster flip pattern.
pub fn exact_swendsen_wang_kernel(model: &IsingModel) -> Result<Vec<f64>, OracleError> {
    let n = check_size(model, MAX_KERNEL_SPINS)?;
    let m = model.num_spins();
    let beta = model.beta();
    let ghost = m;
    // (a, b, coupling) including ghost edges with the ghost fixed at +1
    let mut links: Vec<(usize, usize, f64)> =
        model.edges().iter().map(|e| (e.i, e.j, e.coupling)).collect();
    for (i, &h) in model.fields().iter().enumerate() {
        if h != 0.0 {
            links.push((i, ghost, h));
        }
    }
    let spin = |x: usize, i: usize| -> f64 {
        if i == ghost || x >> i & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    };
    let mut needed = 0u64;
    for x in 0..n {
        let sat = links.iter().filter(|&&(a, b, c)| c * spin(x, a) * spin(x, b) > 0.0).count();
        needed = needed.saturating_add(1u64 << (sat + m).min(63));
    }
    if needed > ENUMERATION_BUDGET {
        return Err(OracleError::BudgetExceeded { needed });
    }
    let mut kernel = vec![0.0; n * n];
    for x in 0..n {
        let sat: Vec<(usize, usize, f64)> = links
            .iter()
            .copied()
            .filter(|&(a, b, c)| c * spin(x, a) * spin(x, b) > 0.0)
            .collect();
        for bonds in 0u64..1 << sat.len() {
            let mut p = 1.0;
            let mut parent: Vec<usize> = (0..=m).collect();
            fn find(parent: &mut [usize], mut a: usize) -> usize {
                while parent[a] != a {
                    parent[a] = parent[parent[a]];
                    a = parent[a];
                }
                a
            }
            for (bit, &(a, b, c)) in sat.iter().enumerate() {
                let pb = -(-2.0 * beta * c.abs()).exp_m1();
                if bonds >> bit & 1 == 1 {
                    p *= pb;
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra] = rb;
                } else {
                    p *= 1.0 - pb;
                }
            }
            if p == 0.0 {
                continue;
            }
            let ghost_root = find(&mut parent, ghost);
            let mut roots: Vec<usize> = (0..m)
                .map(|i| find(&mut parent, i))
                .filter(|&r| r != ghost_root)
                .collect();
            roots.sort_unstable();
            roots.dedup();
            let weight = p / (1u64 << roots.len()) as f64;
            for pattern in 0u64..1 << roots.len() {
                let mut y = x;
                for i in 0..m {
                    let r = find(&mut parent, i);
                    if let Ok(pos) = roots.binary_search(&r) {
                        if pattern >> pos & 1 == 1 {
                            y ^= 1 << i;
                        }
                    }
                }
                kernel[x * n + y] += weight;
            }
        }
    }
    Ok(kernel)
}

/// Effective and marginal acceptance rates between `x0` and `x1` for a
/// single energy-biased walk of length `k` at bias `gamma`.
///
/// `α_eff` averages the pathwise acceptance over the walks reaching `x1`,
/// weighted by their proposal probability; `α_m` applies the Metropolis
/// ratio to the path-summed proposal.
pub fn effective_vs_marginal_alpha(
    model: &IsingModel,
    x0: &SpinState,
    x1: &SpinState,
    k: usize,
    gamma: f64,
) -> Result<(f64, f64), OracleError> {
    model.check_state(x0).map_err(KernelError::from)?;
    model.check_state(x1).map_err(KernelError::from)?;
    let d = x0.hamming_distance(x1).map_err(KernelError::from)?;
    if k == 0 || d != k {
        return Err(OracleError::Unsupported(format!(
            "states at distance {d} are not on the shell of radius {k}"
        )));
    }
    let diff: Vec<usize> = (0..x0.len()).filter(|&i| x0.get(i) != x1.get(i)).collect();
    let orderings = ordered_paths(k, k);
    let mut fact = 1u64;
    for i in 1..=k as u64 {
        fact = fact.saturating_mul(i);
    }
    if fact > ENUMERATION_BUDGET {
        return Err(OracleError::BudgetExceeded { needed: fact });
    }
    let beta = model.beta();
    let de = model.energy_unchecked(x1) - model.energy_unchecked(x0);
    let (mut fwd_mass, mut rev_mass, mut accepted_mass) = (0.0, 0.0, 0.0);
    for ord in orderings {
        let path = SawPath::new(ord.iter().map(|&o| diff[o]).collect())?;
        let lf = saw_logprob(model, x0, &path, gamma)?;
        let lr = saw_logprob(model, x1, &path.reversed(), gamma)?;
        fwd_mass += lf.exp();
        rev_mass += lr.exp();
        accepted_mass += lf.exp() * log_acceptance_ratio(beta, de, lf, lr).min(0.0).exp();
    }
    let alpha_eff = accepted_mass / fwd_mass;
    let alpha_m = (-beta * de + rev_mass.ln() - fwd_mass.ln()).min(0.0).exp();
    Ok((alpha_eff, alpha_m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, IsingModel};

    fn two_spin() -> IsingModel {
        IsingModel::new(2, 1.0, vec![Edge { i: 0, j: 1, coupling: 1.0 }], vec![0.0; 2]).unwrap()
    }

    fn triangle() -> IsingModel {
        let edges = vec![
            Edge { i: 0, j: 1, coupling: 1.0 },
            Edge { i: 1, j: 2, coupling: 1.0 },
            Edge { i: 0, j: 2, coupling: -1.0 },
        ];
        IsingModel::new(3, 0.9, edges, vec![0.4, 0.0, -0.2]).unwrap()
    }

    #[test]
    fn two_spin_target() {
        let pi = exact_distribution(&two_spin()).unwrap();
        let z = 2.0 * 1f64.exp() + 2.0 * (-1f64).exp();
        // index 3 is (+,+), index 0 is (-,-)
        assert!((pi[3] - 1f64.exp() / z).abs() < 1e-15);
        assert!((pi[0] - 0.44039).abs() < 1e-5);
        assert!((pi[1] - 0.05961).abs() < 1e-5);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((log_partition(&two_spin()).unwrap() - z.ln()).abs() < 1e-12);
    }

    #[test]
    fn uniform_without_couplings() {
        let model = IsingModel::new(4, 2.0, vec![], vec![0.0; 4]).unwrap();
        for p in exact_distribution(&model).unwrap() {
            assert!((p - 1.0 / 16.0).abs() < 1e-15);
        }
        let big = IsingModel::new(21, 1.0, vec![], vec![0.0; 21]).unwrap();
        assert!(matches!(exact_distribution(&big), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn tv_examples() {
        let p = [0.25; 4];
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tv_distance(&p, &[0.5, 0.5, 0.0, 0.0]).unwrap(), 0.5);
        assert!(tv_distance(&p, &[0.5, 0.5]).is_err());
        assert!(tv_distance(&[0.5, 0.6], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn path_enumeration_counts() {
        assert_eq!(ordered_paths(6, 2).len(), 30);
        assert_eq!(ordered_paths(5, 3).len(), 60);
        assert_eq!(ordered_paths(3, 3).len(), 6);
        assert!(ordered_paths(2, 3).is_empty());
    }

    #[test]
    fn baseline_kernels_are_stationary() {
        let model = triangle();
        let pi = exact_distribution(&model).unwrap();
        let sweep = exact_site_sequence_kernel(&model, &[0, 1, 2]).unwrap();
        let random = exact_random_scan_kernel(&model).unwrap();
        let sw = exact_swendsen_wang_kernel(&model).unwrap();
        for k in [&sweep, &random, &sw] {
            assert!(row_sum_residual(k, 8) < 1e-12);
            assert!(stationarity_residual(k, &pi) < 1e-12);
        }
        // single-site heat bath and SW are reversible; a systematic sweep is not
        assert!(marginal_balance_residual(&random, &pi) < 1e-12);
        assert!(marginal_balance_residual(&sw, &pi) < 1e-12);
    }

    #[test]
    fn uniform_target_kernel() {
        let model = IsingModel::new(4, 1.0, vec![], vec![0.0; 4]).unwrap();
        let params = KernelParams::single(1, 0.7);
        let k = exact_sardonics_kernel(&model, &params, DensityRoute::Implementation).unwrap();
        // two single flips: back home w.p. 1/4, else uniform over the 6 states at distance 2
        for x in 0..16usize {
            for y in 0..16usize {
                let d = (x ^ y).count_ones();
                let expected = match d {
                    0 => 0.25,
                    2 => 0.125,
                    _ => 0.0,
                };
                assert!((k.marginal[x * 16 + y] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn corrupted_sign_breaks_balance() {
        let model = triangle();
        let pi = exact_distribution(&model).unwrap();
        let params = KernelParams::single(1, 0.5);
        let good = exact_sardonics_kernel(&model, &params, DensityRoute::Dense).unwrap();
        assert!(marginal_balance_residual(&good.marginal, &pi) < 1e-12);
        let flipped = |b: f64, de: f64, lf: f64, lr: f64| b * de + lr - lf;
        let bad = exact_sardonics_kernel_with(&model, &params, DensityRoute::Dense, &flipped).unwrap();
        assert!(marginal_balance_residual(&bad.marginal, &pi) > 1e-3);
    }

    #[test]
    fn alpha_query_validation() {
        let model = triangle();
        let x0 = SpinState::all_up(3);
        assert!(effective_vs_marginal_alpha(&model, &x0, &x0, 1, 1.0).is_err());
        let x1 = x0.apply_flips(&[0, 1]).unwrap();
        assert!(effective_vs_marginal_alpha(&model, &x0, &x1, 1, 1.0).is_err());
        let (a, b) = effective_vs_marginal_alpha(&model, &x0, &x1, 2, 1.0).unwrap();
        assert!(a <= b + 1e-12 && a > 0.0);
        let flat = IsingModel::new(3, 1.0, vec![], vec![0.0; 3]).unwrap();
        let (a, b) = effective_vs_marginal_alpha(&flat, &x0, &x1, 2, 1.0).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
    }
}
