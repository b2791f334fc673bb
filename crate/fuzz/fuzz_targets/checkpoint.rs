#![no_main]

//! Fuzz the HNCK checkpoint decoder.

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = hallucinet::model_zoo::decode_checkpoint(data);
});
