#![no_main]

use libfuzzer_sys::fuzz_target;
use psm_core::io::{format_grid, parse_grid};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_grid(text) {
        assert_eq!(g.values.len(), g.dims.pow(3));
        assert!(g.values.iter().all(|v| (0.0..=1.0).contains(v)));
        let again = parse_grid(&format_grid(&g)).expect("formatted output parses");
        assert_eq!(again, g);
    }
});
