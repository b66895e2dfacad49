//! Zero-mean Gaussian-process regression with a unit-variance ARD squared
//! exponential kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::BayesOptError;

const JITTER: f64 = 1e-8;
const JITTER_ESCALATIONS: usize = 3;
/// Box on the log-hyperparameters during fitting.
const LOG_LENGTH_RANGE: (f64, f64) = (-4.6, 4.6);
const LOG_NOISE_RANGE: (f64, f64) = (-9.2, 2.3);
/// Noise level of the fixed restart points.
const RESTART_NOISE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypers {
    /// One length scale `ψ_d` per input dimension.
    pub length_scales: Vec<f64>,
    /// Observation noise standard deviation `σ_η`.
    pub noise_std: f64,
}

impl Hypers {
    pub fn isotropic(dim: usize, length_scale: f64, noise_std: f64) -> Self {
        Hypers {
            length_scales: vec![length_scale; dim],
            noise_std,
        }
    }

    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.length_scales.iter().map(|l| l.ln()).collect();
        v.push(self.noise_std.ln());
        v
    }

    fn from_log(v: &[f64]) -> Self {
        let (ls, noise) = v.split_at(v.len() - 1);
        Hypers {
            length_scales: ls.iter().map(|l| l.exp()).collect(),
            noise_std: noise[0].exp(),
        }
    }
}

/// `k(a, b) = exp(-½ Σ_d (a_d - b_d)² / ψ_d²)`.
pub fn ard_kernel(a: &[f64], b: &[f64], length_scales: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(length_scales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    (-0.5 * s).exp()
}

/// A fitted surrogate. Targets are optionally standardized as
/// `(z - offset) / scale` before fitting; predictions are in original units.
#[derive(Debug, Clone)]
pub struct GpSurrogate {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    pub hypers: Hypers,
    pub offset: f64,
    pub scale: f64,
    /// Diagonal jitter actually added before factorization.
    pub jitter: f64,
    /// All inputs coincide; the fit is regularized by jitter only.
    pub degenerate: bool,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

fn covariance(inputs: &[Vec<f64>], hypers: &Hypers) -> DMatrix<f64> {
    let n = inputs.len();
    let noise = hypers.noise_std.powi(2);
    DMatrix::from_fn(n, n, |i, j| {
        ard_kernel(&inputs[i], &inputs[j], &hypers.length_scales) + if i == j { noise } else { 0.0 }
    })
}

/// Cholesky of `a + jitter·I`, with `jitter = 1e-8·max diag` raised tenfold
/// up to three times on failure.
fn factor(a: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64), BayesOptError> {
    let max_diag = a.diagonal().iter().fold(0.0f64, |m, v| m.max(*v));
    let mut jitter = JITTER * max_diag.max(f64::MIN_POSITIVE);
    for _ in 0..=JITTER_ESCALATIONS {
        let mut m = a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(BayesOptError::NotPositiveDefinite)
}

impl GpSurrogate {
    /// The prior: no observations.
    pub fn empty(dim: usize) -> Self {
        GpSurrogate {
            inputs: Vec::new(),
            targets: Vec::new(),
            hypers: Hypers::isotropic(dim, 1.0, 1e-3),
            offset: 0.0,
            scale: 1.0,
            jitter: 0.0,
            degenerate: false,
            chol: None,
            alpha: DVector::zeros(0),
        }
    }

    /// Conditions on `(inputs, targets)` with fixed hyperparameters and no standardization.
    pub fn condition(inputs: Vec<Vec<f64>>, targets: Vec<f64>, hypers: Hypers) -> Result<Self, BayesOptError> {
        Self::condition_standardized(inputs, targets, hypers, 0.0, 1.0)
    }

    pub fn condition_standardized(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        hypers: Hypers,
        offset: f64,
        scale: f64,
    ) -> Result<Self, BayesOptError> {
        if inputs.len() != targets.len() {
            return Err(BayesOptError::Shape(format!(
                "{} inputs, {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if let Some(bad) = inputs.iter().find(|x| x.len() != hypers.length_scales.len()) {
            return Err(BayesOptError::Shape(format!(
                "input of dimension {} for {} length scales",
                bad.len(),
                hypers.length_scales.len()
            )));
        }
        if !(scale > 0.0) || targets.iter().any(|z| !z.is_finite()) {
            return Err(BayesOptError::Shape("targets must be finite with a positive scale".into()));
        }
        if inputs.is_empty() {
            let mut gp = Self::empty(hypers.length_scales.len());
            gp.hypers = hypers;
            gp.offset = offset;
            gp.scale = scale;
            return Ok(gp);
        }
        let degenerate = inputs.len() > 1 && inputs.iter().all(|x| x == &inputs[0]);
        let (chol, jitter) = factor(&covariance(&inputs, &hypers))?;
        let y = DVector::from_iterator(targets.len(), targets.iter().map(|z| (z - offset) / scale));
        let alpha = chol.solve(&y);
        Ok(GpSurrogate {
            inputs,
            targets,
            hypers,
            offset,
            scale,
            jitter,
            degenerate,
            chol: Some(chol),
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Predictive mean and variance (variance clamped at 0).
    pub fn predict(&self, theta: &[f64]) -> (f64, f64) {
        let Some(chol) = &self.chol else {
            return (self.offset, self.scale * self.scale);
        };
        let ls = &self.hypers.length_scales;
        let k = DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|x| ard_kernel(x, theta, ls)));
        let mu = k.dot(&self.alpha);
        let v = chol.l().solve_lower_triangular(&k).expect("Cholesky factor is non-singular");
        let var = (1.0 - v.dot(&v)).max(0.0);
        (self.offset + self.scale * mu, self.scale * self.scale * var)
    }

    /// `log N(y; 0, K + σ²I)` of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let Some(chol) = &self.chol else {
            return 0.0;
        };
        let n = self.inputs.len() as f64;
        let y = DVector::from_iterator(self.targets.len(), self.targets.iter().map(|z| (z - self.offset) / self.scale));
        let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * y.dot(&self.alpha) - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    /// Log marginal likelihood and its gradient in the log-hyperparameters.
    fn lml_and_gradient(&self) -> (f64, Vec<f64>) {
        let chol = self.chol.as_ref().expect("fitted surrogate");
        let n = self.inputs.len();
        let dim = self.hypers.length_scales.len();
        let inv = chol.inverse();
        // W = αα' - A^{-1};  ∂L/∂h = ½ tr(W ∂A/∂h)
        let w = &self.alpha * self.alpha.transpose() - inv;
        let ls = &self.hypers.length_scales;
        let mut grad = vec![0.0; dim + 1];
        for i in 0..n {
            for j in 0..n {
                let kij = ard_kernel(&self.inputs[i], &self.inputs[j], ls);
                let wij = w[(i, j)];
                for d in 0..dim {
                    let diff = self.inputs[i][d] - self.inputs[j][d];
                    grad[d] += 0.5 * wij * kij * diff * diff / (ls[d] * ls[d]);
                }
            }
        }
        grad[dim] = 0.5 * w.trace() * 2.0 * self.hypers.noise_std.powi(2);
        (self.log_marginal_likelihood(), grad)
    }
}

/// Settings for hyperparameter fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Extra isotropic starting length scales tried besides the initial hypers.
    pub restart_length_scales: Vec<f64>,
    pub max_iterations: usize,
    /// Standardize targets to zero mean and unit variance before fitting.
    pub standardize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restart_length_scales: vec![0.1, 0.3, 1.0],
            max_iterations: 300,
            standardize: false,
        }
    }
}

fn clamp_log(v: &mut [f64]) {
    let n = v.len();
    for (i, x) in v.iter_mut().enumerate() {
        let (lo, hi) = bounds(i, n);
        *x = x.clamp(lo, hi);
    }
}

fn bounds(i: usize, n: usize) -> (f64, f64) {
    if i + 1 == n {
        LOG_NOISE_RANGE
    } else {
        LOG_LENGTH_RANGE
    }
}

/// Projected BFGS ascent from `x`; only strictly improving steps are taken.
fn ascend(
    build: &dyn Fn(Hypers) -> Result<GpSurrogate, BayesOptError>,
    mut x: Vec<f64>,
    mut cur: GpSurrogate,
    max_iterations: usize,
) -> GpSurrogate {
    let n = x.len();
    let (mut f, mut g) = cur.lml_and_gradient();
    let mut h = DMatrix::<f64>::identity(n, n);
    for _ in 0..max_iterations {
        // components pushing against an active bound are frozen
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let (lo, hi) = bounds(i, n);
                !((x[i] <= lo && g[i] < 0.0) || (x[i] >= hi && g[i] > 0.0))
            })
            .collect();
        let gf = DVector::from_fn(n, |i, _| if free[i] { g[i] } else { 0.0 });
        if gf.norm() < 1e-8 {
            break;
        }
        let mut d = &h * &gf;
        for i in 0..n {
            if !free[i] {
                d[i] = 0.0;
            }
        }
        if d.dot(&gf) <= 0.0 {
            h = DMatrix::identity(n, n);
            d = gf.clone();
        }
        let mut t = 1.0;
        let mut moved = None;
        for _ in 0..50 {
            let mut trial: Vec<f64> = (0..n).map(|i| x[i] + t * d[i]).collect();
            clamp_log(&mut trial);
            let ascent: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
            if let Ok(next) = build(Hypers::from_log(&trial)) {
                let fn_ = next.log_marginal_likelihood();
                if fn_ > f && fn_ >= f + 1e-4 * ascent {
                    moved = Some((trial, next, fn_));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, next, fn_)) = moved else {
            if h == DMatrix::identity(n, n) {
                break;
            }
            h = DMatrix::identity(n, n);
            continue;
        };
        let (_, gn) = next.lml_and_gradient();
        let s = DVector::from_fn(n, |i, _| trial[i] - x[i]);
        let y = DVector::from_fn(n, |i, _| g[i] - gn[i]);
        let sy = s.dot(&y);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - rho * &s * y.transpose();
            let right = &eye - rho * &y * s.transpose();
            h = left * h * right + rho * &s * s.transpose();
        }
        let small = fn_ - f < 1e-13 * (1.0 + f.abs());
        x = trial;
        cur = next;
        f = fn_;
        g = gn;
        if small {
            break;
        }
    }
    cur
}

/// Multi-start projected quasi-Newton ascent on the log-hyperparameters. A step
/// is taken only if it raises the likelihood, so the result is never worse
/// than `initial`.
pub fn gp_fit(
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    initial: &Hypers,
    options: &FitOptions,
) -> Result<GpSurrogate, BayesOptError> {
    if inputs.len() < 2 {
        return Err(BayesOptError::TooFewObservations(inputs.len()));
    }
    let (offset, scale) = if options.standardize {
        let n = targets.len() as f64;
        let mean = targets.iter().sum::<f64>() / n;
        let sd = (targets.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n).sqrt();
        (mean, if sd > 1e-12 { sd } else { 1.0 })
    } else {
        (0.0, 1.0)
    };
    let build = |h: Hypers| GpSurrogate::condition_standardized(inputs.clone(), targets.clone(), h, offset, scale);

    let start = build(initial.clone())?;
    let mut best_lml = start.log_marginal_likelihood();
    let mut best = start;
    let mut starts = vec![initial.clone()];
    for &l in &options.restart_length_scales {
        starts.push(Hypers::isotropic(initial.length_scales.len(), l, RESTART_NOISE));
    }
    for h in starts {
        let mut logh = h.to_log();
        clamp_log(&mut logh);
        let Ok(cur) = build(Hypers::from_log(&logh)) else {
            continue;
        };
        let cur = ascend(&build, logh, cur, options.max_iterations);
        let lml = cur.log_marginal_likelihood();
        if lml > best_lml {
            best_lml = lml;
            best = cur;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_prediction() {
        let gp = GpSurrogate::empty(3);
        assert_eq!(gp.predict(&[0.1, 0.2, 0.3]), (0.0, 1.0));
    }

    #[test]
    fn single_noiseless_observation() {
        let gp = GpSurrogate::condition(vec![vec![0.4, 0.6]], vec![2.5], Hypers::isotropic(2, 0.5, 0.0)).unwrap();
        let (mu, var) = gp.predict(&[0.4, 0.6]);
        assert!((mu - 2.5).abs() < 1e-7);
        assert!(var < 1e-7);
    }

    #[test]
    fn interpolates_distant_points() {
        let gp = GpSurrogate::condition(
            vec![vec![0.0], vec![1.0]],
            vec![-1.0, 3.0],
            Hypers::isotropic(1, 0.1, 1e-4),
        )
        .unwrap();
        assert!((gp.predict(&[0.0]).0 + 1.0).abs() < 1e-3);
        assert!((gp.predict(&[1.0]).0 - 3.0).abs() < 1e-3);
    }

    #[test]
    fn likelihood_matches_dense_formula() {
        let inputs = vec![vec![0.1, 0.9], vec![0.5, 0.5], vec![0.8, 0.3], vec![0.2, 0.2]];
        let z = vec![1.0, -0.5, 0.25, 2.0];
        let h = Hypers { length_scales: vec![0.3, 0.7], noise_std: 0.2 };
        let gp = GpSurrogate::condition(inputs.clone(), z.clone(), h.clone()).unwrap();
        let mut a = covariance(&inputs, &h);
        for i in 0..4 {
            a[(i, i)] += gp.jitter;
        }
        let zv = DVector::from_vec(z);
        let lu = a.clone().lu();
        let expected = -0.5 * zv.dot(&lu.solve(&zv).unwrap())
            - 0.5 * lu.determinant().ln()
            - 2.0 * (2.0 * std::f64::consts::PI).ln();
        assert!((gp.log_marginal_likelihood() - expected).abs() < 1e-8);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let inputs = vec![vec![0.1, 0.9], vec![0.5, 0.5], vec![0.8, 0.3], vec![0.3, 0.1], vec![0.9, 0.9]];
        let z = vec![1.0, -0.5, 0.25, 2.0, 0.0];
        let logh = vec![-1.0, -0.4, -1.5];
        let at = |v: &[f64]| {
            GpSurrogate::condition(inputs.clone(), z.clone(), Hypers::from_log(v)).unwrap()
        };
        let (_, g) = at(&logh).lml_and_gradient();
        for k in 0..3 {
            let (mut up, mut dn) = (logh.clone(), logh.clone());
            up[k] += 1e-5;
            dn[k] -= 1e-5;
            let fd = (at(&up).log_marginal_likelihood() - at(&dn).log_marginal_likelihood()) / 2e-5;
            assert!((fd - g[k]).abs() < 1e-5, "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn fit_improves_and_is_a_fixed_point() {
        let inputs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0, ((i * 7) % 12) as f64 / 11.0]).collect();
        let z: Vec<f64> = inputs.iter().map(|x| (6.0 * x[0]).sin() + 0.1 * x[1]).collect();
        let init = Hypers::isotropic(2, 1.0, 0.5);
        let start = GpSurrogate::condition(inputs.clone(), z.clone(), init.clone()).unwrap();
        let opts = FitOptions::default();
        let fit = gp_fit(inputs.clone(), z.clone(), &init, &opts).unwrap();
        assert!(fit.log_marginal_likelihood() >= start.log_marginal_likelihood());
        let refit = gp_fit(inputs, z, &fit.hypers, &opts).unwrap();
        let gain = refit.log_marginal_likelihood() - fit.log_marginal_likelihood();
        assert!(gain <= 1e-6, "{gain}");
    }

    #[test]
    fn degenerate_inputs_are_flagged() {
        let fit = gp_fit(
            vec![vec![0.5, 0.5]; 3],
            vec![1.0, 1.1, 0.9],
            &Hypers::isotropic(2, 0.3, 0.1),
            &FitOptions::default(),
        )
        .unwrap();
        assert!(fit.degenerate);
        assert!(gp_fit(vec![vec![0.5]], vec![1.0], &Hypers::isotropic(1, 0.3, 0.1), &FitOptions::default()).is_err());
    }

    #[test]
    fn extra_observation_never_raises_variance() {
        let h = Hypers::isotropic(2, 0.4, 0.05);
        let mut inputs = vec![vec![0.1, 0.1], vec![0.9, 0.4]];
        let mut z = vec![0.0, 1.0];
        let q = [0.5, 0.5];
        let before = GpSurrogate::condition(inputs.clone(), z.clone(), h.clone()).unwrap().predict(&q).1;
        inputs.push(vec![0.5, 0.5]);
        z.push(0.3);
        let after = GpSurrogate::condition(inputs, z, h).unwrap().predict(&q).1;
        assert!(after <= before);
    }
}
