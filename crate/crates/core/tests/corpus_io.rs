use std::fs;

use wie_core::corpus::{
    generate_corpus, load_corpus, save_corpus, Corpus, GenSpec, Split, GOLD_FILE, GROUPS_FILE, MANIFEST_FILE,
};
use wie_core::dom::parse_html;
use wie_core::{AttributeLabel, Error};

fn spec() -> GenSpec {
    GenSpec {
        seed: 77,
        n_pages: 24,
        ..GenSpec::default()
    }
}

#[test]
fn save_then_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_corpus(&spec()).unwrap();
    save_corpus(&corpus, dir.path()).unwrap();
    let back = load_corpus(dir.path()).unwrap();
    assert_eq!(back, corpus);
    assert_eq!(back.manifest.count(Split::Test) + back.manifest.count(Split::Train), 24);
    assert_eq!(back.manifest.count(Split::Test), 6);
}

#[test]
fn empty_corpus_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_corpus(&GenSpec { n_pages: 0, ..spec() }).unwrap();
    save_corpus(&corpus, dir.path()).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap(), "");
    assert_eq!(load_corpus(dir.path()).unwrap(), Corpus::default());
}

#[test]
fn generation_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    save_corpus(&generate_corpus(&spec()).unwrap(), a.path()).unwrap();
    save_corpus(&generate_corpus(&spec()).unwrap(), b.path()).unwrap();
    for name in [MANIFEST_FILE, GOLD_FILE, GROUPS_FILE, "pages/p00003.html"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let other = generate_corpus(&GenSpec { seed: 78, ..spec() }).unwrap();
    assert_ne!(other.pages[0].html, generate_corpus(&spec()).unwrap().pages[0].html);
}

#[test]
fn corrupted_gold_xpath_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    save_corpus(&generate_corpus(&spec()).unwrap(), dir.path()).unwrap();
    let path = dir.path().join(GOLD_FILE);
    let text = fs::read_to_string(&path).unwrap();
    let first = text.lines().next().unwrap().to_string();
    let mut f: Vec<&str> = first.split('\t').collect();
    let bogus = format!("{}/table[9]", f[1]);
    f[1] = &bogus;
    fs::write(&path, text.replacen(&first, &f.join("\t"), 1)).unwrap();
    match load_corpus(dir.path()) {
        Err(Error::DanglingGoldXPath { page_id, xpath }) => {
            assert_eq!(page_id, f[0]);
            assert!(xpath.ends_with("/table[9]"));
        }
        other => panic!("expected dangling xpath, got {other:?}"),
    }
}

#[test]
fn missing_page_file_is_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    save_corpus(&generate_corpus(&spec()).unwrap(), dir.path()).unwrap();
    fs::remove_file(dir.path().join("pages/p00005.html")).unwrap();
    assert!(matches!(load_corpus(dir.path()), Err(Error::Io { .. })));
}

#[test]
fn malformed_manifest_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    save_corpus(&generate_corpus(&spec()).unwrap(), dir.path()).unwrap();
    let path = dir.path().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen("\tlist\t", "\tgrid\t", 1).replacen("\tdetail\t", "\tgrid\t", 1)).unwrap();
    assert!(matches!(load_corpus(dir.path()), Err(Error::MalformedManifest { line: 1, .. })));
}

#[test]
fn span_authoring_rate_tracks_probability() {
    let p = 0.35;
    let c = generate_corpus(&GenSpec {
        seed: 5,
        n_pages: 120,
        list_ratio: 1.0,
        span_link_prob: p,
        ..GenSpec::default()
    })
    .unwrap();
    let (mut links, mut spans) = (0usize, 0usize);
    for page in &c.pages {
        let t = parse_html(&page.html, &page.page_id).unwrap();
        for (x, l) in &page.gold {
            if *l == AttributeLabel::ProductLink {
                links += 1;
                spans += usize::from(!t.nodes()[t.resolve(x).unwrap()].is_leaf());
            }
        }
    }
    assert!(links >= 500, "{links} links");
    let rate = spans as f64 / links as f64;
    let se = (p * (1.0 - p) / links as f64).sqrt();
    assert!((rate - p).abs() < 3.0 * se, "rate {rate} vs {p} (se {se})");
}

#[test]
fn include_probability_zero_removes_attribute() {
    let mut s = spec();
    s.include_prob.insert(AttributeLabel::ProductPrice, 0.0);
    let c = generate_corpus(&s).unwrap();
    assert!(c
        .pages
        .iter()
        .all(|p| p.gold.values().all(|&l| l != AttributeLabel::ProductPrice)));
    assert!(c.pages.iter().all(|p| !p.html.contains("<strong>")));
}
