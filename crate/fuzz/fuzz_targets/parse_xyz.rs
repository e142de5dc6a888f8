#![no_main]

use libfuzzer_sys::fuzz_target;
use psm_core::io::{format_xyz, parse_xyz};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ps) = parse_xyz(text) {
        assert!(ps.iter().all(|p| p.is_finite()));
        let again = parse_xyz(&format_xyz(&ps)).expect("formatted output parses");
        assert_eq!(again, ps);
    }
});
