#![no_main]

use libfuzzer_sys::fuzz_target;
use sardonics::bayes_opt::BoltzmannPolicy;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(policy) = BoltzmannPolicy::from_json(text) {
        let total: f64 = policy.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }
});
