use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sardonics::diagnostics::{acf_area, EnergyTrace};

fn ar1(phi: f64, n: usize, seed: u64) -> EnergyTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: f64 = rng.sample::<f64, _>(StandardNormal) / (1.0 - phi * phi).sqrt();
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        x.push(v);
        v = phi * v + rng.sample::<f64, _>(StandardNormal);
    }
    EnergyTrace::new(x)
}

#[test]
fn ar1_area_matches_geometric_series() {
    // Σ_{t=1}^{200} 0.9^t
    let oracle = 0.9 * (1.0 - 0.9f64.powi(200)) / 0.1;
    assert!((oracle - 9.0).abs() < 1e-8);
    // one trace's area has a standard deviation near 0.6 at this length
    let areas: Vec<f64> = (0..20).map(|seed| acf_area(&ar1(0.9, 100_000, seed), 200).unwrap()).collect();
    let mean = areas.iter().sum::<f64>() / areas.len() as f64;
    assert!((mean - oracle).abs() < 0.3, "mean area {mean}");
    assert!(areas.iter().all(|a| (a - oracle).abs() < 2.0), "{areas:?}");
}

#[test]
fn white_noise_area_is_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
    assert!(acf_area(&EnergyTrace::new(x), 50).unwrap().abs() < 0.5);
}

#[test]
fn constant_trace_has_zero_area() {
    assert_eq!(acf_area(&EnergyTrace::new(vec![-3.0; 500]), 100).unwrap(), 0.0);
}
