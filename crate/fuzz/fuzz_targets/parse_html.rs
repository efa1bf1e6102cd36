#![no_main]

use libfuzzer_sys::fuzz_target;
use wie_core::dom::{enumerate_nodes, parse_html, SerializationPolicy};

fuzz_target!(|data: &str| {
    if let Ok(tree) = parse_html(data, "fuzz") {
        for policy in [SerializationPolicy::LeafOnly, SerializationPolicy::RetainInternal] {
            let seq = enumerate_nodes(&tree, policy);
            for item in &seq.items {
                assert!(tree.resolve(&item.xpath).is_some());
            }
        }
        let again = parse_html(&tree.to_html(), "fuzz").unwrap();
        assert_eq!(again.len(), tree.len());
    }
});
