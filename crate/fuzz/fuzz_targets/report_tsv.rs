#![no_main]

use libfuzzer_sys::fuzz_target;
use wie_core::evaluation::parse_report_tsv;

fuzz_target!(|data: &str| {
    let _ = parse_report_tsv(data);
});
