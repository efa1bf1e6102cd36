#![no_main]

use libfuzzer_sys::fuzz_target;
use wie_core::formats::{parse_gold_groups, parse_group_records};

fuzz_target!(|data: &str| {
    let _ = parse_gold_groups(data);
    let _ = parse_group_records(data);
});
