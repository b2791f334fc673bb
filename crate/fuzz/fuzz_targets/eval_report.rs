#![no_main]

//! Fuzz the eval-report parser (summary block extraction).

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = hallucinet::evaluator::parse_eval_report(text);
    }
});
