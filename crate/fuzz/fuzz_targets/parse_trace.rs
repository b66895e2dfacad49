#![no_main]

use libfuzzer_sys::fuzz_target;
use sardonics::diagnostics::{parse_trace, write_trace};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_trace(data) {
        let mut out = Vec::new();
        write_trace(&mut out, &records).expect("writing to memory");
        assert_eq!(parse_trace(out.as_slice()).expect("written trace parses"), records);
    }
});
