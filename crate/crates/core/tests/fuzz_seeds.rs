use std::fs;
use std::path::PathBuf;

use wie_core::corpus::parse_manifest;
use wie_core::dom::{enumerate_nodes, parse_html, parse_xpath, SerializationPolicy};
use wie_core::evaluation::parse_report_tsv;
use wie_core::formats::{parse_gold_groups, parse_group_records, parse_label_records, parse_predictions};
use wie_core::tagger::TaggerModel;
use wie_core::xpath_encoding::EncoderParams;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn html_seeds() {
    for (name, text) in seeds("parse_html") {
        let tree = parse_html(&text, "seed").unwrap_or_else(|e| panic!("{name}: {e}"));
        for policy in [SerializationPolicy::LeafOnly, SerializationPolicy::RetainInternal] {
            for item in enumerate_nodes(&tree, policy).items {
                assert!(tree.resolve(&item.xpath).is_some(), "{name}");
            }
        }
        assert_eq!(parse_html(&tree.to_html(), "seed").unwrap().len(), tree.len(), "{name}");
    }
}

#[test]
fn xpath_seeds() {
    for (name, text) in seeds("parse_xpath") {
        let x = parse_xpath(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_xpath(&x.to_string()).unwrap(), x);
    }
}

#[test]
fn record_seeds() {
    for (name, text) in seeds("label_records") {
        let ok = if name.starts_with("gold") {
            parse_label_records(&text).map(|v| v.len())
        } else {
            parse_predictions(&text).map(|v| v.len())
        };
        assert!(ok.unwrap_or_else(|e| panic!("{name}: {e}")) > 0);
    }
    for (name, text) in seeds("group_records") {
        let ok = if name.starts_with("gold") {
            parse_gold_groups(&text).map(|v| v.len())
        } else {
            parse_group_records(&text).map(|v| v.len())
        };
        assert!(ok.unwrap_or_else(|e| panic!("{name}: {e}")) > 0);
    }
    for (name, text) in seeds("manifest") {
        assert!(!parse_manifest(&text).unwrap_or_else(|e| panic!("{name}: {e}")).entries.is_empty());
    }
    for (name, text) in seeds("report_tsv") {
        assert_eq!(parse_report_tsv(&text).unwrap_or_else(|e| panic!("{name}: {e}")).rows.len(), 17);
    }
}

#[test]
fn parameter_seeds() {
    for (name, text) in seeds("tagger_checkpoint") {
        let m = TaggerModel::from_checkpoint(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(m.to_checkpoint(), text);
    }
    for (name, text) in seeds("encoder_text") {
        let p = EncoderParams::from_text(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(p.to_text(), text);
    }
}

#[test]
fn truncated_seeds_never_panic() {
    for target in ["parse_html", "parse_xpath", "label_records", "group_records", "manifest", "tagger_checkpoint", "encoder_text", "report_tsv"] {
        for (_, text) in seeds(target) {
            let cuts: Vec<usize> = (0..=text.len()).filter(|&i| text.is_char_boundary(i)).step_by(7).collect();
            for &i in &cuts {
                let t = &text[..i];
                let _ = parse_html(t, "s");
                let _ = parse_xpath(t);
                let _ = parse_label_records(t);
                let _ = parse_predictions(t);
                let _ = parse_gold_groups(t);
                let _ = parse_group_records(t);
                let _ = parse_manifest(t);
                let _ = parse_report_tsv(t);
                let _ = TaggerModel::from_checkpoint(t);
                let _ = EncoderParams::from_text(t);
            }
        }
    }
}
