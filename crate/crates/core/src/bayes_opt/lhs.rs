use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::space::{ParamSpace, DIMS};

/// `n` points in `[0,1)^dim`; along every dimension each of the `n` equal
/// bins holds exactly one point.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; n];
    let mut bins: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        bins.shuffle(rng);
        for (p, &b) in points.iter_mut().zip(&bins) {
            p[d] = (b as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

/// Initial design: a Latin hypercube over the unit box, each point repaired
/// onto the feasible set.
pub fn lhs_init(space: &ParamSpace, n: usize, seed: u64) -> Vec<[f64; DIMS]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    latin_hypercube(n, DIMS, &mut rng)
        .into_iter()
        .map(|p| space.repair(&p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_per_bin() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = latin_hypercube(5, 1, &mut rng);
        let mut xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        for (i, x) in xs.iter().enumerate() {
            assert!(*x >= i as f64 * 0.2 && *x < (i + 1) as f64 * 0.2);
        }
        let pts = latin_hypercube(13, 7, &mut rng);
        for d in 0..7 {
            let mut seen = [false; 13];
            for p in &pts {
                seen[(p[d] * 13.0) as usize] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn design_is_feasible_and_seeded() {
        let space = ParamSpace::for_model(16).unwrap();
        let a = lhs_init(&space, 8, 3);
        assert_eq!(a, lhs_init(&space, 8, 3));
        assert_ne!(a, lhs_init(&space, 8, 4));
        for t in &a {
            assert!(space.is_feasible(&space.decode(t)));
        }
    }
}
