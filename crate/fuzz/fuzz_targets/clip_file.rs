#![no_main]

//! Fuzz the SVID clip-file decoder: arbitrary bytes must produce
//! Ok(frames) or a structured error, never a panic or oversized
//! allocation.

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(frames) = hallucinet::synthvid::decode_clip(data) {
        // valid decodes must round-trip
        let bytes = hallucinet::synthvid::encode_clip(&frames);
        let again = hallucinet::synthvid::decode_clip(&bytes).expect("re-decode");
        assert_eq!(frames, again);
    }
});
