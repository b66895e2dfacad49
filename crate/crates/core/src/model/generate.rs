use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Edge, IsingModel, ModelError, RbmWeights, SpinState};

/// How couplings are assigned by the lattice generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingSpec {
    Constant(f64),
    /// Uniform on `{-1, +1}`.
    RandomSign,
    /// `N(0, scale²)`.
    Gaussian(f64),
}

/// How fields are assigned by the lattice generators.
pub type FieldSpec = CouplingSpec;

impl CouplingSpec {
    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            CouplingSpec::Constant(c) => c,
            CouplingSpec::RandomSign => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
            CouplingSpec::Gaussian(scale) => {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            }
        }
    }
}

/// Source of RBM weights.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    /// i.i.d. `N(0, scale²)` couplings, zero biases.
    Gaussian { scale: f64 },
    /// Weights in the `{0,1}` unit convention, converted to spin form.
    External(RbmWeights),
}

fn fields_from(spec: FieldSpec, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| spec.draw(rng)).collect()
}

/// Periodic `L × L` grid; spin `(r, c)` has index `r * L + c`.
pub fn make_torus_2d(
    side: usize,
    coupling: CouplingSpec,
    field: FieldSpec,
    beta: f64,
    seed: u64,
) -> Result<IsingModel, ModelError> {
    if side < 3 {
        return Err(ModelError::InvalidLattice(format!(
            "torus side must be at least 3, got {side}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = |r: usize, c: usize| r * side + c;
    let mut edges = Vec::with_capacity(2 * side * side);
    for r in 0..side {
        for c in 0..side {
            edges.push(Edge {
                i: idx(r, c),
                j: idx(r, (c + 1) % side),
                coupling: coupling.draw(&mut rng),
            });
            edges.push(Edge {
                i: idx(r, c),
                j: idx((r + 1) % side, c),
                coupling: coupling.draw(&mut rng),
            });
        }
    }
    let fields = fields_from(field, side * side, &mut rng);
    IsingModel::new(side * side, beta, edges, fields)
}

/// Periodic `L × L × L` cube; spin `(x, y, z)` has index `(x * L + y) * L + z`.
pub fn make_cube_3d(
    side: usize,
    coupling: CouplingSpec,
    field: FieldSpec,
    beta: f64,
    seed: u64,
) -> Result<IsingModel, ModelError> {
    if side < 3 {
        return Err(ModelError::InvalidLattice(format!(
            "cube side must be at least 3, got {side}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = |x: usize, y: usize, z: usize| (x * side + y) * side + z;
    let mut edges = Vec::with_capacity(3 * side * side * side);
    for x in 0..side {
        for y in 0..side {
            for z in 0..side {
                let here = idx(x, y, z);
                for there in [
                    idx((x + 1) % side, y, z),
                    idx(x, (y + 1) % side, z),
                    idx(x, y, (z + 1) % side),
                ] {
                    edges.push(Edge {
                        i: here,
                        j: there,
                        coupling: coupling.draw(&mut rng),
                    });
                }
            }
        }
    }
    let n = side * side * side;
    let fields = fields_from(field, n, &mut rng);
    IsingModel::new(n, beta, edges, fields)
}

/// Complete bipartite model: visible spins `0..n_visible`, hidden spins after.
/// The bipartition is recorded for block-Gibbs.
pub fn make_bipartite_rbm(
    n_visible: usize,
    n_hidden: usize,
    source: &WeightSource,
    beta: f64,
    seed: u64,
) -> Result<IsingModel, ModelError> {
    if n_visible == 0 || n_hidden == 0 {
        return Err(ModelError::InvalidLattice(
            "RBM layers must be non-empty".into(),
        ));
    }
    let n = n_visible + n_hidden;
    let (edges, fields) = match source {
        WeightSource::Gaussian { scale } => {
            if !scale.is_finite() || *scale < 0.0 {
                return Err(ModelError::NonFinite);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::with_capacity(n_visible * n_hidden);
            for v in 0..n_visible {
                for h in 0..n_hidden {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    edges.push(Edge {
                        i: v,
                        j: n_visible + h,
                        coupling: scale * z,
                    });
                }
            }
            (edges, vec![0.0; n])
        }
        WeightSource::External(w) => {
            if w.n_visible != n_visible || w.n_hidden != n_hidden {
                return Err(ModelError::DimensionMismatch {
                    expected: n_visible * n_hidden,
                    actual: w.n_visible * w.n_hidden,
                });
            }
            w.to_spin_form()
        }
    };
    IsingModel::new(n, beta, edges, fields)?.with_bipartition(n_visible)
}

/// Chimera lattice of `rows × cols` K_{4,4} unit cells.
///
/// Cell `(r, c)` owns spins `8 * (r * cols + c) + 0..8`. Offsets `0..4` form the
/// left half (coupled vertically to the same offset in cell `(r + 1, c)`),
/// offsets `4..8` the right half (coupled horizontally to cell `(r, c + 1)`).
/// Every left spin couples to every right spin inside a cell. No wrap-around.
pub fn make_chimera(
    rows: usize,
    cols: usize,
    coupling: CouplingSpec,
    field: FieldSpec,
    beta: f64,
    seed: u64,
) -> Result<IsingModel, ModelError> {
    if rows == 0 || cols == 0 {
        return Err(ModelError::InvalidLattice(
            "chimera needs at least one cell".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = |r: usize, c: usize| 8 * (r * cols + c);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let b = base(r, c);
            for left in 0..4 {
                for right in 4..8 {
                    edges.push(Edge {
                        i: b + left,
                        j: b + right,
                        coupling: coupling.draw(&mut rng),
                    });
                }
            }
            if c + 1 < cols {
                let nb = base(r, c + 1);
                for k in 4..8 {
                    edges.push(Edge {
                        i: b + k,
                        j: nb + k,
                        coupling: coupling.draw(&mut rng),
                    });
                }
            }
            if r + 1 < rows {
                let nb = base(r + 1, c);
                for k in 0..4 {
                    edges.push(Edge {
                        i: b + k,
                        j: nb + k,
                        coupling: coupling.draw(&mut rng),
                    });
                }
            }
        }
    }
    let n = 8 * rows * cols;
    let fields = fields_from(field, n, &mut rng);
    IsingModel::new(n, beta, edges, fields)
}

/// Every pair of spins coupled.
pub fn make_complete(
    num_spins: usize,
    coupling: CouplingSpec,
    field: FieldSpec,
    beta: f64,
    seed: u64,
) -> Result<IsingModel, ModelError> {
    if num_spins < 2 {
        return Err(ModelError::InvalidLattice(format!(
            "complete graph needs at least 2 spins, got {num_spins}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(num_spins * (num_spins - 1) / 2);
    for i in 0..num_spins {
        for j in i + 1..num_spins {
            edges.push(Edge {
                i,
                j,
                coupling: coupling.draw(&mut rng),
            });
        }
    }
    let fields = fields_from(field, num_spins, &mut rng);
    IsingModel::new(num_spins, beta, edges, fields)
}

/// Uniformly random spins, deterministic in `seed`.
pub fn random_state(num_spins: usize, seed: u64) -> SpinState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_with(num_spins, &mut rng)
}

pub(crate) fn random_state_with(num_spins: usize, rng: &mut impl Rng) -> SpinState {
    SpinState(
        (0..num_spins)
            .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn check_invariants(m: &IsingModel) {
        let mut seen = HashSet::new();
        for e in m.edges() {
            assert!(e.i < e.j);
            assert!(seen.insert((e.i, e.j)));
        }
        for i in 0..m.num_spins() {
            for &(j, c) in m.neighbors(i) {
                assert!(m.neighbors(j).iter().any(|&(k, c2)| k == i && c2 == c));
            }
        }
        assert_eq!(m.edges_from_adjacency(), m.edges().to_vec());
    }

    #[test]
    fn torus_shape() {
        let m = make_torus_2d(3, CouplingSpec::Constant(1.0), FieldSpec::Constant(0.0), 1.0, 0)
            .unwrap();
        assert_eq!(m.num_spins(), 9);
        assert_eq!(m.edges().len(), 18);
        assert!((0..9).all(|i| m.degree(i) == 4));
        check_invariants(&m);
        assert!(make_torus_2d(2, CouplingSpec::RandomSign, FieldSpec::RandomSign, 1.0, 0).is_err());

        let big = make_torus_2d(60, CouplingSpec::RandomSign, FieldSpec::RandomSign, 1.0, 4).unwrap();
        assert_eq!(big.num_spins(), 3600);
        assert_eq!(big.edges().len(), 7200);
        assert!(big.edges().iter().all(|e| e.coupling.abs() == 1.0));
        assert!(big.fields().iter().all(|h| h.abs() == 1.0));
        check_invariants(&big);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = make_torus_2d(8, CouplingSpec::RandomSign, FieldSpec::RandomSign, 1.0, 11).unwrap();
        let b = make_torus_2d(8, CouplingSpec::RandomSign, FieldSpec::RandomSign, 1.0, 11).unwrap();
        let c = make_torus_2d(8, CouplingSpec::RandomSign, FieldSpec::RandomSign, 1.0, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let a = make_cube_3d(4, CouplingSpec::RandomSign, FieldSpec::Constant(0.0), 1.0, 3).unwrap();
        let b = make_cube_3d(4, CouplingSpec::RandomSign, FieldSpec::Constant(0.0), 1.0, 3).unwrap();
        assert_eq!(a, b);
        let src = WeightSource::Gaussian { scale: 0.1 };
        assert_eq!(
            make_bipartite_rbm(4, 3, &src, 1.0, 5).unwrap(),
            make_bipartite_rbm(4, 3, &src, 1.0, 5).unwrap()
        );
        assert_eq!(random_state(50, 9), random_state(50, 9));
    }

    #[test]
    fn complete_shape() {
        let m = make_complete(6, CouplingSpec::Gaussian(1.0), FieldSpec::Gaussian(0.5), 1.0, 2).unwrap();
        assert_eq!(m.edges().len(), 15);
        assert!((0..6).all(|i| m.degree(i) == 5));
        check_invariants(&m);
        assert!(make_complete(1, CouplingSpec::RandomSign, FieldSpec::RandomSign, 1.0, 0).is_err());
    }

    #[test]
    fn cube_shape() {
        let m = make_cube_3d(3, CouplingSpec::Constant(1.0), FieldSpec::Constant(0.0), 1.0, 0)
            .unwrap();
        assert_eq!(m.num_spins(), 27);
        assert_eq!(m.edges().len(), 81);
        assert!((0..27).all(|i| m.degree(i) == 6));
        check_invariants(&m);
        let glass = make_cube_3d(9, CouplingSpec::RandomSign, FieldSpec::Constant(0.0), 1.0, 1)
            .unwrap();
        assert_eq!(glass.num_spins(), 729);
        assert!(!glass.has_fields());
    }

    #[test]
    fn rbm_shape() {
        let src = WeightSource::Gaussian { scale: 0.1 };
        let m = make_bipartite_rbm(2, 3, &src, 1.0, 0).unwrap();
        assert_eq!(m.num_spins(), 5);
        assert_eq!(m.edges().len(), 6);
        assert_eq!(m.bipartition(), Some(2));
        check_invariants(&m);
        let big = make_bipartite_rbm(784, 500, &src, 1.0, 0).unwrap();
        assert_eq!(big.num_spins(), 1284);
        assert_eq!(big.edges().len(), 392_000);
        assert!(make_bipartite_rbm(0, 3, &src, 1.0, 0).is_err());
    }

    #[test]
    fn chimera_shape() {
        let one = make_chimera(1, 1, CouplingSpec::Constant(1.0), FieldSpec::Constant(0.0), 1.0, 0)
            .unwrap();
        assert_eq!(one.num_spins(), 8);
        assert_eq!(one.edges().len(), 16);
        let m = make_chimera(4, 4, CouplingSpec::RandomSign, FieldSpec::RandomSign, 1.0, 0).unwrap();
        assert_eq!(m.num_spins(), 128);
        check_invariants(&m);

        // Count couplers from the adjacency rule directly over all spin pairs.
        let cell = |s: usize| (s / 8 / 4, s / 8 % 4, s % 8);
        let mut count = 0;
        for a in 0..128 {
            for b in (a + 1)..128 {
                let ((ra, ca, ka), (rb, cb, kb)) = (cell(a), cell(b));
                let same_cell = ra == rb && ca == cb && (ka < 4) != (kb < 4);
                let horizontal = ra == rb && ca.abs_diff(cb) == 1 && ka == kb && ka >= 4;
                let vertical = ca == cb && ra.abs_diff(rb) == 1 && ka == kb && ka < 4;
                if same_cell || horizontal || vertical {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 352);
        assert_eq!(m.edges().len(), 352);
    }

    #[test]
    fn random_state_concentrates() {
        assert_eq!(random_state(1, 0).len(), 1);
        let mean: f64 = (0..10_000u64)
            .map(|s| random_state(100, s).magnetization())
            .sum::<f64>()
            / 10_000.0;
        assert!(mean.abs() < 0.05, "mean magnetization {mean}");
    }
}
