use serde::{Deserialize, Serialize};

use super::KernelError;

/// Parameters of one SARDONICS transition kernel.
///
/// `gamma_low`/`gamma_high` are the two energy-bias levels; a segment is a
/// pair of walks whose biases are `(low, low)`, `(high, low)` or
/// `(low, high)` with probabilities `p_ll`, `p_hl`, `p_lh`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub k_l: usize,
    pub k_u: usize,
    pub gamma_low: f64,
    pub gamma_high: f64,
    pub p_ll: f64,
    pub p_hl: f64,
    pub p_lh: f64,
    /// Number of concatenated walk pairs per move.
    pub segments: usize,
}

pub const MAX_SEGMENTS: usize = 5;
const SIMPLEX_TOL: f64 = 1e-12;

/// Which bias levels a segment's two walks use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    LowLow,
    HighLow,
    LowHigh,
}

impl PairKind {
    pub const ALL: [PairKind; 3] = [PairKind::LowLow, PairKind::HighLow, PairKind::LowHigh];

    /// Bias level index (0 = low, 1 = high) of the first and second walk.
    pub(crate) fn levels(self) -> (usize, usize) {
        match self {
            PairKind::LowLow => (0, 0),
            PairKind::HighLow => (1, 0),
            PairKind::LowHigh => (0, 1),
        }
    }
}

impl KernelParams {
    /// A single-bias, fixed-length kernel: `k_l = k_u = k`, `p_ll = 1`, one segment.
    /// Only irreducible for `k = 1`; see [`KernelParams::validate_reducible`].
    pub fn single(k: usize, gamma: f64) -> Self {
        KernelParams {
            k_l: k,
            k_u: k,
            gamma_low: gamma,
            gamma_high: gamma,
            p_ll: 1.0,
            p_hl: 0.0,
            p_lh: 0.0,
            segments: 1,
        }
    }

    /// Full validation for a model with `num_spins` spins, including the
    /// irreducibility guard (`k_l = 1` or `k_u > k_l`).
    pub fn validate(&self, num_spins: usize) -> Result<(), KernelError> {
        self.validate_reducible(num_spins)?;
        if self.k_l != 1 && self.k_u == self.k_l {
            return Err(KernelError::InvalidParams(format!(
                "constant walk length {} > 1 gives a reducible chain",
                self.k_l
            )));
        }
        Ok(())
    }

    /// Everything but the irreducibility guard. Fixed-length kernels still
    /// satisfy detailed balance, which the exact oracles rely on.
    pub fn validate_reducible(&self, num_spins: usize) -> Result<(), KernelError> {
        let bad = |msg: String| Err(KernelError::InvalidParams(msg));
        if self.k_l < 1 || self.k_l > self.k_u || self.k_u > num_spins {
            return bad(format!(
                "walk lengths must satisfy 1 <= k_l <= k_u <= M, got k_l={}, k_u={}, M={num_spins}",
                self.k_l, self.k_u
            ));
        }
        if !(self.gamma_low.is_finite() && self.gamma_high.is_finite())
            || self.gamma_low < 0.0
            || self.gamma_high < self.gamma_low
        {
            return bad(format!(
                "biases must satisfy 0 <= gamma_low <= gamma_high, got {} and {}",
                self.gamma_low, self.gamma_high
            ));
        }
        let ps = [self.p_ll, self.p_hl, self.p_lh];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p))
            || (ps.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL
        {
            return bad(format!("mixture weights {ps:?} are not a probability vector"));
        }
        if !(1..=MAX_SEGMENTS).contains(&self.segments) {
            return bad(format!(
                "segment count must be in 1..={MAX_SEGMENTS}, got {}",
                self.segments
            ));
        }
        Ok(())
    }

    pub(crate) fn gammas(&self) -> [f64; 2] {
        [self.gamma_low, self.gamma_high]
    }

    pub fn weight(&self, kind: PairKind) -> f64 {
        match kind {
            PairKind::LowLow => self.p_ll,
            PairKind::HighLow => self.p_hl,
            PairKind::LowHigh => self.p_lh,
        }
    }

    /// Log-mixture of a pair given each walk's log-density at both bias levels.
    pub(crate) fn mix(&self, first: [f64; 2], second: [f64; 2]) -> f64 {
        let terms = PairKind::ALL.iter().filter_map(|&kind| {
            let p = self.weight(kind);
            (p > 0.0).then(|| {
                let (a, b) = kind.levels();
                p.ln() + first[a] + second[b]
            })
        });
        log_sum_exp(terms)
    }

    /// Draws a component; zero-weight components are never chosen.
    pub(crate) fn pick_kind(&self, u: f64) -> PairKind {
        let mut acc = 0.0;
        let mut last = PairKind::LowLow;
        for kind in PairKind::ALL {
            let p = self.weight(kind);
            if p > 0.0 {
                acc += p;
                last = kind;
                if u < acc {
                    return kind;
                }
            }
        }
        last
    }
}

pub(crate) fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sane() -> KernelParams {
        KernelParams {
            k_l: 1,
            k_u: 4,
            gamma_low: 0.9,
            gamma_high: 1.1,
            p_ll: 0.5,
            p_hl: 0.3,
            p_lh: 0.2,
            segments: 2,
        }
    }

    #[test]
    fn validation() {
        assert!(sane().validate(8).is_ok());
        assert!(sane().validate(3).is_err());
        assert!(KernelParams::single(2, 1.0).validate(6).is_err());
        assert!(KernelParams::single(2, 1.0).validate_reducible(6).is_ok());
        assert!(KernelParams::single(1, 1.0).validate(6).is_ok());
        let mut p = sane();
        p.k_l = 3;
        p.k_u = 4;
        assert!(p.validate(8).is_ok());
        p.gamma_high = 0.5;
        assert!(p.validate(8).is_err());
        let mut p = sane();
        p.p_lh = 0.3;
        assert!(p.validate(8).is_err());
        let mut p = sane();
        p.segments = 6;
        assert!(p.validate(8).is_err());
        p.segments = 0;
        assert!(p.validate(8).is_err());
        let mut p = sane();
        p.k_l = 0;
        assert!(p.validate(8).is_err());
    }

    #[test]
    fn pick_kind_skips_empty_components() {
        let mut p = sane();
        p.p_ll = 0.7;
        p.p_hl = 0.3;
        p.p_lh = 0.0;
        assert_eq!(p.pick_kind(0.0), PairKind::LowLow);
        assert_eq!(p.pick_kind(0.75), PairKind::HighLow);
        assert_eq!(p.pick_kind(0.999_999_999_999_999_9), PairKind::HighLow);
    }

    #[test]
    fn mixture_degenerate_cases() {
        let first = [-1.0, -2.0];
        let second = [-0.5, -3.0];
        let mut p = sane();
        p.p_ll = 1.0;
        p.p_hl = 0.0;
        p.p_lh = 0.0;
        assert_eq!(p.mix(first, second), -1.5);
        let q = sane();
        let expected = (0.5 * (-1.5f64).exp() + 0.3 * (-2.5f64).exp() + 0.2 * (-4.0f64).exp()).ln();
        assert!((q.mix(first, second) - expected).abs() < 1e-14);
    }
}
