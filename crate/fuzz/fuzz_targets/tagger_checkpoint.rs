#![no_main]

use libfuzzer_sys::fuzz_target;
use wie_core::tagger::TaggerModel;

fuzz_target!(|data: &str| {
    if let Ok(m) = TaggerModel::from_checkpoint(data) {
        let text = m.to_checkpoint();
        assert_eq!(TaggerModel::from_checkpoint(&text).unwrap().to_checkpoint(), text);
    }
});
