//! Expected improvement and a DIRECT (dividing rectangles) maximizer.

use statrs::function::erf::erfc;

use super::gp::GpSurrogate;
use super::space::{ParamSpace, DIMS};

/// `EI = (μ - z*) Φ(u) + σ φ(u)` with `u = (μ - z*) / σ`, for maximization.
pub fn expected_improvement_from(mu: f64, var: f64, best: f64) -> f64 {
    let sigma = var.max(0.0).sqrt();
    let gain = mu - best;
    if sigma <= 0.0 {
        return gain.max(0.0);
    }
    let u = gain / sigma;
    let cdf = 0.5 * erfc(-u / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (gain * cdf + sigma * pdf).max(0.0)
}

pub fn expected_improvement(gp: &GpSurrogate, theta: &[f64], best: f64) -> f64 {
    let (mu, var) = gp.predict(theta);
    expected_improvement_from(mu, var, best)
}

/// Balance parameter in the potential-optimality test.
const DIRECT_EPSILON: f64 = 1e-4;

struct Rect {
    center: Vec<f64>,
    /// Number of trisections along each dimension.
    levels: Vec<u32>,
    /// Negated objective (DIRECT minimizes).
    value: f64,
}

impl Rect {
    fn size(&self) -> f64 {
        0.5 * self.levels.iter().map(|&l| 3f64.powi(-2 * l as i32)).sum::<f64>().sqrt()
    }
}

/// Maximizes `f` over `[0,1]^dim` with at most `budget` evaluations.
/// Deterministic; the first evaluation is the box center, so the result is
/// never below `f(center)`. Returns the best point and its value.
pub fn direct_maximize(f: &mut dyn FnMut(&[f64]) -> f64, dim: usize, budget: usize) -> (Vec<f64>, f64) {
    let center = vec![0.5; dim];
    let first = f(&center);
    let mut evals = 1;
    let mut rects = vec![Rect {
        center: center.clone(),
        levels: vec![0; dim],
        value: -first,
    }];
    let (mut best_x, mut best_v) = (center, first);

    while evals < budget {
        let chosen = potentially_optimal(&rects);
        if chosen.is_empty() {
            break;
        }
        for idx in chosen {
            if evals >= budget {
                break;
            }
            let min_level = *rects[idx].levels.iter().min().expect("dim >= 1");
            let delta = 3f64.powi(-(min_level as i32 + 1));
            let long_dims: Vec<usize> = (0..dim).filter(|&d| rects[idx].levels[d] == min_level).collect();
            let mut samples = Vec::new();
            for &d in &long_dims {
                let mut pair = [(Vec::new(), 0.0), (Vec::new(), 0.0)];
                for (slot, sign) in pair.iter_mut().zip([1.0, -1.0]) {
                    let mut x = rects[idx].center.clone();
                    x[d] += sign * delta;
                    let v = f(&x);
                    evals += 1;
                    if v > best_v {
                        best_v = v;
                        best_x = x.clone();
                    }
                    *slot = (x, -v);
                }
                samples.push((d, pair));
                if evals >= budget {
                    break;
                }
            }
            // split first along the dimension with the best sample
            samples.sort_by(|a, b| {
                let wa = a.1[0].1.min(a.1[1].1);
                let wb = b.1[0].1.min(b.1[1].1);
                wa.total_cmp(&wb).then(a.0.cmp(&b.0))
            });
            for (d, pair) in samples {
                rects[idx].levels[d] += 1;
                let levels = rects[idx].levels.clone();
                for (x, v) in pair {
                    rects.push(Rect {
                        center: x,
                        levels: levels.clone(),
                        value: v,
                    });
                }
            }
        }
    }
    (best_x, best_v)
}

/// Indices of rectangles on the lower-right hull of (size, value).
fn potentially_optimal(rects: &[Rect]) -> Vec<usize> {
    let fmin = rects.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    // best rectangle per distinct size (lowest index wins ties)
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for (i, r) in rects.iter().enumerate() {
        let s = r.size();
        match groups.iter_mut().find(|(gs, _)| (gs - s).abs() <= 1e-12 * s.max(1e-300)) {
            Some(g) => {
                if r.value < rects[g.1].value {
                    g.1 = i;
                }
            }
            None => groups.push((s, i)),
        }
    }
    let mut out = Vec::new();
    for &(sj, j) in &groups {
        let fj = rects[j].value;
        let mut k_low = f64::NEG_INFINITY;
        let mut k_high = f64::INFINITY;
        for &(si, i) in &groups {
            let fi = rects[i].value;
            if si < sj {
                k_low = k_low.max((fj - fi) / (sj - si));
            } else if si > sj {
                k_high = k_high.min((fi - fj) / (si - sj));
            }
        }
        if k_low > k_high || k_high <= 0.0 {
            continue;
        }
        if k_high.is_finite() && fj - k_high * sj > fmin - DIRECT_EPSILON * fmin.abs() {
            continue;
        }
        out.push(j);
    }
    out.sort_unstable();
    out
}

/// Maximizes EI over the feasible set: each candidate is repaired before
/// evaluation, and the repaired best point is returned.
pub fn acq_optimize(gp: &GpSurrogate, space: &ParamSpace, best: f64, budget: usize) -> [f64; DIMS] {
    let mut objective = |x: &[f64]| expected_improvement(gp, &space.repair(x), best);
    let (x, _) = direct_maximize(&mut objective, DIMS, budget.max(1));
    space.repair(&x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes_opt::gp::Hypers;

    #[test]
    fn ei_spot_values() {
        assert_eq!(expected_improvement_from(0.3, 0.0, 0.5), 0.0);
        assert_eq!(expected_improvement_from(1.5, 0.0, 0.5), 1.0);
        let v = expected_improvement_from(2.0, 1.0, 2.0);
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert!(expected_improvement_from(-30.0, 1e-4, 0.0) >= 0.0);
    }

    #[test]
    fn constant_objective_returns_center() {
        let (x, v) = direct_maximize(&mut |_| 1.0, 4, 200);
        assert_eq!(x, vec![0.5; 4]);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn finds_a_gaussian_bump() {
        let c = [0.21, 0.77, 0.4, 0.9, 0.15, 0.63, 0.35];
        let mut f = |x: &[f64]| {
            let s: f64 = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
            (-s / (2.0 * 0.2f64.powi(2))).exp()
        };
        // dense-grid oracle along each axis through the optimum agrees with `c`
        let (x, _) = direct_maximize(&mut f, 7, 500);
        for (a, b) in x.iter().zip(&c) {
            assert!((a - b).abs() < 0.05, "{x:?}");
        }
    }

    #[test]
    fn acquisition_is_feasible_and_beats_center() {
        let space = ParamSpace::for_model(16).unwrap();
        let inputs: Vec<Vec<f64>> = (0..6)
            .map(|i| space.repair(&[i as f64 / 5.0, 0.5, 0.3, 0.7, 0.2, 0.2, 0.5]).to_vec())
            .collect();
        let z: Vec<f64> = (0..6).map(|i| -((i as f64 - 3.0).powi(2))).collect();
        let gp = GpSurrogate::condition(inputs, z, Hypers::isotropic(7, 0.3, 0.1)).unwrap();
        let theta = acq_optimize(&gp, &space, 0.0, 150);
        assert!(space.is_feasible(&space.decode(&theta)));
        let center = expected_improvement(&gp, &space.repair(&[0.5; 7]), 0.0);
        assert!(expected_improvement(&gp, &theta, 0.0) >= center);
    }
}
