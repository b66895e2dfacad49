use serde::{Deserialize, Serialize};

use super::BayesOptError;
use crate::saw::{KernelParams, MAX_SEGMENTS};

/// Coordinates of the search space, in order.
pub const DIM_NAMES: [&str; 7] = ["k_l", "k_u", "gamma_low", "gamma_high", "p_ll", "p_hl", "segments"];
pub const DIMS: usize = DIM_NAMES.len();

/// Box bounds of the searched kernel parameters. `p_lh` is implied by the
/// simplex and not searched directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceBounds {
    pub k_l: (usize, usize),
    pub k_u: (usize, usize),
    pub gamma_low: (f64, f64),
    pub gamma_high: (f64, f64),
    pub segments: (usize, usize),
}

impl Default for SpaceBounds {
    fn default() -> Self {
        SpaceBounds {
            k_l: (1, 70),
            k_u: (2, 120),
            gamma_low: (0.89, 1.05),
            gamma_high: (0.9, 1.15),
            segments: (1, MAX_SEGMENTS),
        }
    }
}

/// The search space for one model, with walk lengths capped at its size.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    lower: [f64; DIMS],
    upper: [f64; DIMS],
    num_spins: usize,
}

const INTEGER: [bool; DIMS] = [true, true, false, false, false, false, true];

impl ParamSpace {
    pub fn new(bounds: &SpaceBounds, num_spins: usize) -> Result<Self, BayesOptError> {
        if num_spins < 2 {
            return Err(BayesOptError::InvalidSpace(format!(
                "need at least 2 spins, got {num_spins}"
            )));
        }
        let cap = |(lo, hi): (usize, usize)| (lo.min(num_spins) as f64, hi.min(num_spins) as f64);
        let (kl, ku, seg) = (cap(bounds.k_l), cap(bounds.k_u), bounds.segments);
        let lower = [kl.0, ku.0, bounds.gamma_low.0, bounds.gamma_high.0, 0.0, 0.0, seg.0 as f64];
        let upper = [kl.1, ku.1, bounds.gamma_low.1, bounds.gamma_high.1, 1.0, 1.0, seg.1 as f64];
        let ok = lower.iter().zip(&upper).all(|(l, u)| l.is_finite() && u.is_finite() && l <= u)
            && lower[0] >= 1.0
            && lower[2] >= 0.0
            && seg.0 >= 1
            && seg.1 <= MAX_SEGMENTS
            // some gamma_high must be reachable from every gamma_low
            && upper[3] >= lower[2]
            && upper[1] >= lower[0];
        if !ok {
            return Err(BayesOptError::InvalidSpace(format!("{bounds:?}")));
        }
        Ok(ParamSpace {
            lower,
            upper,
            num_spins,
        })
    }

    pub fn for_model(num_spins: usize) -> Result<Self, BayesOptError> {
        Self::new(&SpaceBounds::default(), num_spins)
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    fn raw(&self, theta: &[f64]) -> [f64; DIMS] {
        let mut v = [0.0; DIMS];
        for d in 0..DIMS {
            let t = theta[d].clamp(0.0, 1.0);
            v[d] = self.lower[d] + t * (self.upper[d] - self.lower[d]);
        }
        v
    }

    /// Maps a unit-box point to feasible kernel parameters: integers rounded,
    /// `k_u := max(k_u, k_l)`, `γ_H := max(γ_H, γ_L)`, mixture renormalized
    /// when `p_ll + p_hl > 1`, and a constant length above 1 widened by one.
    pub fn decode(&self, theta: &[f64]) -> KernelParams {
        debug_assert_eq!(theta.len(), DIMS);
        let v = self.raw(theta);
        let round = |d: usize| (v[d].round() as usize).clamp(self.lower[d] as usize, self.upper[d] as usize);
        let mut k_l = round(0);
        let mut k_u = round(1).max(k_l);
        if k_l > 1 && k_u == k_l {
            if k_u < self.num_spins {
                k_u += 1;
            } else {
                k_l -= 1;
            }
        }
        let gamma_low = v[2];
        let gamma_high = v[3].max(gamma_low);
        let (mut p_ll, mut p_hl) = (v[4], v[5]);
        let sum = p_ll + p_hl;
        let p_lh = if sum > 1.0 {
            p_ll /= sum;
            p_hl = 1.0 - p_ll;
            0.0
        } else {
            1.0 - sum
        };
        KernelParams {
            k_l,
            k_u,
            gamma_low,
            gamma_high,
            p_ll,
            p_hl,
            p_lh,
            segments: round(6),
        }
    }

    /// Unit-box coordinates of a parameter set (inverse of [`ParamSpace::decode`]
    /// on feasible points).
    pub fn encode(&self, params: &KernelParams) -> [f64; DIMS] {
        let v = [
            params.k_l as f64,
            params.k_u as f64,
            params.gamma_low,
            params.gamma_high,
            params.p_ll,
            params.p_hl,
            params.segments as f64,
        ];
        let mut theta = [0.0; DIMS];
        for d in 0..DIMS {
            let width = self.upper[d] - self.lower[d];
            theta[d] = if width > 0.0 {
                ((v[d] - self.lower[d]) / width).clamp(0.0, 1.0)
            } else {
                0.5
            };
        }
        theta
    }

    /// Projects a unit-box point onto the coordinates of its decoded parameters.
    pub fn repair(&self, theta: &[f64]) -> [f64; DIMS] {
        self.encode(&self.decode(theta))
    }

    /// Box bounds, kernel validity and the irreducibility guard.
    pub fn is_feasible(&self, params: &KernelParams) -> bool {
        let v = [
            params.k_l as f64,
            params.k_u as f64,
            params.gamma_low,
            params.gamma_high,
            params.p_ll,
            params.p_hl,
            params.segments as f64,
        ];
        // gamma_high may be lifted to gamma_low, above its own lower bound only
        let in_box = (0..DIMS).all(|d| {
            let lo = if d == 3 { self.lower[3].min(self.lower[2]) } else { self.lower[d] };
            let hi = if d == 3 { self.upper[3].max(self.upper[2]) } else { self.upper[d] };
            let slack = if d == 1 || d == 0 { 1.0 } else { 1e-12 };
            v[d] >= lo - slack && v[d] <= hi + slack
        });
        in_box && params.validate(self.num_spins).is_ok()
    }

    pub fn is_integer(d: usize) -> bool {
        INTEGER[d]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn caps_lengths_at_model_size() {
        let s = ParamSpace::for_model(16).unwrap();
        let p = s.decode(&[1.0; DIMS]);
        assert_eq!((p.k_l, p.k_u), (15, 16));
        assert!(s.is_feasible(&p));
        let p = s.decode(&[0.0; DIMS]);
        assert_eq!((p.k_l, p.k_u, p.segments), (1, 2, 1));
        assert_eq!((p.gamma_low, p.gamma_high), (0.89, 0.9));
        assert_eq!((p.p_ll, p.p_hl, p.p_lh), (0.0, 0.0, 1.0));
        assert!(ParamSpace::for_model(1).is_err());
    }

    #[test]
    fn repairs_orderings_and_simplex() {
        let s = ParamSpace::for_model(200).unwrap();
        let p = s.decode(&[1.0, 0.0, 1.0, 0.0, 0.9, 0.6, 0.5]);
        assert_eq!(p.k_u, p.k_l + 1);
        assert_eq!(p.gamma_high, p.gamma_low);
        assert!((p.p_ll - 0.6).abs() < 1e-12 && (p.p_hl - 0.4).abs() < 1e-12 && p.p_lh == 0.0);
        assert!(s.is_feasible(&p));
    }

    #[test]
    fn table_bounds() {
        let b = SpaceBounds::default();
        assert_eq!((b.k_l, b.k_u, b.segments), ((1, 70), (2, 120), (1, 5)));
        assert_eq!((b.gamma_low, b.gamma_high), ((0.89, 1.05), (0.9, 1.15)));
        let bad = SpaceBounds {
            gamma_low: (1.2, 1.3),
            ..b
        };
        assert!(ParamSpace::new(&bad, 10).is_err());
    }

    proptest! {
        #[test]
        fn every_decoded_point_is_feasible(theta in proptest::array::uniform7(0.0f64..=1.0), m in 2usize..300) {
            let s = ParamSpace::for_model(m).unwrap();
            let p = s.decode(&theta);
            prop_assert!(s.is_feasible(&p), "{:?}", p);
            prop_assert!(p.k_u <= m);
            let q = s.decode(&s.repair(&theta));
            prop_assert!(s.is_feasible(&q));
            prop_assert_eq!((q.k_l, q.k_u, q.segments), (p.k_l, p.k_u, p.segments));
        }
    }
}
