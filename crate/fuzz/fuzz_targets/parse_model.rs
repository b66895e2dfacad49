#![no_main]

use libfuzzer_sys::fuzz_target;
use sardonics::model::{parse_model, write_model};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = parse_model(text) {
        // whatever parses must survive a write/parse cycle
        let again = parse_model(&write_model(&model)).expect("written model parses");
        assert_eq!(again, model);
    }
});
