#![no_main]

//! Fuzz the dataset manifest parser.

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = hallucinet::synthvid::parse_manifest(text);
    }
});
