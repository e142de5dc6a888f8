#![no_main]

use libfuzzer_sys::fuzz_target;
use psm_core::io::parse_bundle_manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_bundle_manifest(text) {
        assert!(!m.candidates.is_empty());
    }
});
