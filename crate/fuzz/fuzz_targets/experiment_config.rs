#![no_main]

use libfuzzer_sys::fuzz_target;
use sardonics::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ExperimentConfig::from_toml(text) {
        let echoed = config.to_toml().expect("valid config serializes");
        assert_eq!(ExperimentConfig::from_toml(&echoed).expect("echo parses"), config);
    }
});
