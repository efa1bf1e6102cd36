#![no_main]

use libfuzzer_sys::fuzz_target;
use wie_core::dom::parse_xpath;

fuzz_target!(|data: &str| {
    if let Ok(x) = parse_xpath(data) {
        assert_eq!(parse_xpath(&x.to_string()).unwrap(), x);
    }
});
