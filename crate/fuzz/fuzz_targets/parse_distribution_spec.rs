#![no_main]

use libfuzzer_sys::fuzz_target;
use psm_core::io::{format_distribution_spec, parse_distribution_spec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_distribution_spec(text) {
        let again = parse_distribution_spec(&format_distribution_spec(&spec)).expect("formatted output parses");
        assert_eq!(again, spec);
    }
});
