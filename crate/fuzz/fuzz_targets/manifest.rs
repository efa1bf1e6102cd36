#![no_main]

use libfuzzer_sys::fuzz_target;
use wie_core::corpus::parse_manifest;

fuzz_target!(|data: &str| {
    let _ = parse_manifest(data);
});
