#![no_main]

use libfuzzer_sys::fuzz_target;
use wie_core::formats::{parse_label_records, parse_predictions};

fuzz_target!(|data: &str| {
    let _ = parse_label_records(data);
    let _ = parse_predictions(data);
});
