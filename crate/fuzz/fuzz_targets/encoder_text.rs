#![no_main]

use libfuzzer_sys::fuzz_target;
use wie_core::xpath_encoding::EncoderParams;

fuzz_target!(|data: &str| {
    if let Ok(p) = EncoderParams::from_text(data) {
        let _ = EncoderParams::from_text(&p.to_text()).unwrap();
    }
});
