#![no_main]

use libfuzzer_sys::fuzz_target;
use sardonics::model::parse_rbm_weights;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(weights) = parse_rbm_weights(text) {
        let _ = weights.to_spin_form();
    }
});
