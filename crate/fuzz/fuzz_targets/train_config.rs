#![no_main]

//! Fuzz the train-config TOML parser (unknown keys must error cleanly).

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = hallucinet::trainer::TrainConfig::from_toml_str(text);
    }
});
