//! Seeded synthetic review pages with gold labels and product groups.
//!
//! Pages come in two kinds: detail pages describing one product with pros,
//! cons and a bottom line, and list pages enumerating several products, each
//! in its own container. A product link is authored either as `<a>text</a>`
//! or as `<a><span>text</span></a>`; the gold label always sits on the `a`.
//!
//! Pages are spread over template domains (`page index % n_domains`) that
//! differ in container tag, heading level, wrapper depth and phrasing. The
//! last `test_domains` domains form the test split.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dom::{parse_html, XPath, XPathUnit};
use crate::error::{Error, Result};
use crate::formats::{parse_gold_groups, parse_label_records, write_gold, write_gold_groups};
use crate::labels::AttributeLabel;
use crate::tagger::{Rule, RuleSet, TextPredicate, TrainingPage};

pub const PROS_HEADING: &str = "What We Like";
pub const CONS_HEADING: &str = "What We Don't Like";
pub const BOTTOM_LINE_PHRASES: &[&str] = &["Bottom Line", "The Bottom Line", "Verdict"];
const LINK_PHRASES: &[&str] = &["Buy now", "Check Price", "Shop now", "View Deal", "See it"];
const PROS_HEADINGS: &[&str] = &[PROS_HEADING];
const CONS_HEADINGS: &[&str] = &[CONS_HEADING];

const THEMES: &[(&str, &[&str])] = &[
    ("Chairs", &["Chair", "Recliner", "Stool", "Lounger"]),
    ("Headphones", &["Headphones", "Earbuds", "Headset"]),
    ("Blenders", &["Blender", "Mixer", "Juicer"]),
    ("Backpacks", &["Backpack", "Daypack", "Rucksack"]),
    ("Lamps", &["Lamp", "Lantern", "Light"]),
    ("Kettles", &["Kettle", "Teapot", "Boiler"]),
];
const BRANDS: &[&str] = &["Acme", "Norda", "Vexa", "Lumio", "Kestrel", "Orbit", "Pinecrest", "Halcyon", "Tamber"];
const ADJECTIVES: &[&str] = &["Classic", "Pro", "Ultra", "Compact", "Deluxe", "Essential", "Plus", "Max"];
const SELLERS: &[&str] = &["Amazon", "Walmart", "Target", "Best Buy", "Home Depot", "Wayfair"];
const HOOKS: &[&str] = &[
    "Best Overall",
    "Best Budget",
    "Best Splurge",
    "Runner Up",
    "Best for Small Spaces",
    "Most Durable",
];
const PRAISE: &[&str] = &[
    "feels sturdy and well made",
    "was easy to set up in minutes",
    "impressed our testers with its comfort",
    "holds up well after weeks of daily use",
    "offers great value for the price",
    "looks good in almost any room",
];
const CAVEATS: &[&str] = &[
    "the finish scratches easily",
    "it runs a little loud",
    "assembly takes some patience",
    "the color options are limited",
    "it is heavier than expected",
];
const PROS_ITEMS: &[&str] = &["Comfortable", "Durable build", "Easy to clean", "Great value", "Quiet", "Lightweight"];
const CONS_ITEMS: &[&str] = &["Pricey", "Bulky", "Short warranty", "Few colors", "Loud motor", "Slow shipping"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PageKind {
    Detail,
    List,
}

impl PageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PageKind::Detail => "detail",
            PageKind::List => "list",
        }
    }
}

impl FromStr for PageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detail" => Ok(PageKind::Detail),
            "list" => Ok(PageKind::List),
            other => Err(Error::InvalidConfig(format!("unknown page kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split {other:?}"))),
        }
    }
}

/// Generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub n_pages: usize,
    /// Probability that a page is a list page.
    pub list_ratio: f64,
    /// Inclusive range of products per list page.
    pub products_per_list: (usize, usize),
    /// Probability a product link is authored as `a/span`.
    pub span_link_prob: f64,
    /// Per-label probability that an optional element is emitted; absent
    /// labels default to 1. Containers and names are always emitted.
    pub include_prob: BTreeMap<AttributeLabel, f64>,
    /// Probability a gold label is dropped from the annotation.
    pub label_noise: f64,
    /// Probability a review paragraph contains an inline link.
    pub review_link_prob: f64,
    pub n_domains: usize,
    pub test_domains: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 0,
            n_pages: 100,
            list_ratio: 0.7,
            products_per_list: (2, 10),
            span_link_prob: 0.5,
            include_prob: BTreeMap::new(),
            label_noise: 0.0,
            review_link_prob: 0.3,
            n_domains: 8,
            test_domains: 2,
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must lie in [0,1], got {p}")))
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        check_prob("list_ratio", self.list_ratio)?;
        check_prob("span_link_prob", self.span_link_prob)?;
        check_prob("label_noise", self.label_noise)?;
        check_prob("review_link_prob", self.review_link_prob)?;
        for (l, &p) in &self.include_prob {
            check_prob(l.as_str(), p)?;
        }
        let (lo, hi) = self.products_per_list;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidConfig(format!("products_per_list range {lo}..={hi} is empty or zero")));
        }
        if self.n_domains == 0 || self.test_domains > self.n_domains {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= n_domains and test_domains <= n_domains, got {} and {}",
                self.n_domains, self.test_domains
            )));
        }
        Ok(())
    }

    pub fn include(&self, label: AttributeLabel) -> f64 {
        self.include_prob.get(&label).copied().unwrap_or(1.0)
    }

    pub fn domain_of(&self, page_index: usize) -> usize {
        page_index % self.n_domains
    }

    pub fn split_of_domain(&self, domain_id: usize) -> Split {
        if domain_id >= self.n_domains - self.test_domains {
            Split::Test
        } else {
            Split::Train
        }
    }

    /// Generator state for page `index`: the spec seed with the page index
    /// as stream, so pages are independent of each other.
    pub fn page_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedPage {
    pub page_id: String,
    pub html: String,
    pub gold: BTreeMap<XPath, AttributeLabel>,
    pub gold_groups: BTreeMap<XPath, i64>,
    pub kind: PageKind,
}

impl AnnotatedPage {
    pub fn training_page(&self) -> Result<TrainingPage> {
        Ok(TrainingPage {
            tree: parse_html(&self.html, &self.page_id)?,
            gold: self.gold.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Page file path relative to the corpus directory.
    pub path: String,
    pub page_id: String,
    pub kind: PageKind,
    pub split: Split,
    pub domain_id: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }
}

/// Pages in manifest order alongside their manifest entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub pages: Vec<AnnotatedPage>,
    pub manifest: Manifest,
}

impl Corpus {
    pub fn split(&self, split: Split) -> impl Iterator<Item = (&AnnotatedPage, &ManifestEntry)> {
        self.pages
            .iter()
            .zip(&self.manifest.entries)
            .filter(move |(_, e)| e.split == split)
    }
}

/// Template parameters shared by all pages of a domain.
#[derive(Debug, Clone)]
struct Domain {
    container: &'static str,
    name_tag: &'static str,
    wrappers: usize,
    link_phrase: &'static str,
    bottom_line: &'static str,
}

fn domain(d: usize) -> Domain {
    Domain {
        container: ["article", "section"][d % 2],
        name_tag: ["h2", "h3"][(d / 2) % 2],
        wrappers: d % 3,
        link_phrase: LINK_PHRASES[d % LINK_PHRASES.len()],
        bottom_line: BOTTOM_LINE_PHRASES[d % BOTTOM_LINE_PHRASES.len()],
    }
}

/// Element under construction, carrying its gold label and group.
#[derive(Debug, Clone)]
struct El {
    tag: &'static str,
    attrs: String,
    text: String,
    children: Vec<El>,
    label: Option<AttributeLabel>,
    group: Option<i64>,
}

impl El {
    fn new(tag: &'static str) -> Self {
        El {
            tag,
            attrs: String::new(),
            text: String::new(),
            children: Vec::new(),
            label: None,
            group: None,
        }
    }

    fn text(tag: &'static str, text: impl Into<String>) -> Self {
        El {
            text: text.into(),
            ..El::new(tag)
        }
    }

    fn label(mut self, l: AttributeLabel) -> Self {
        self.label = Some(l);
        self
    }

    fn attr(mut self, attrs: &str) -> Self {
        self.attrs = attrs.to_string();
        self
    }

    fn child(mut self, c: El) -> Self {
        self.children.push(c);
        self
    }

    fn set_group(&mut self, g: i64) {
        if self.label.is_some() {
            self.group = Some(g);
        }
        for c in &mut self.children {
            c.set_group(g);
        }
    }

    fn render(&self, out: &mut String) {
        out.push('<');
        out.push_str(self.tag);
        if !self.attrs.is_empty() {
            out.push(' ');
            out.push_str(&self.attrs);
        }
        out.push('>');
        escape(&self.text, out);
        for c in &self.children {
            c.render(out);
        }
        let _ = write!(out, "</{}>", self.tag);
    }

    fn collect(&self, path: &mut Vec<XPathUnit>, out: &mut Vec<(XPath, AttributeLabel, Option<i64>)>) {
        if let Some(l) = self.label {
            out.push((XPath::from_units(path.clone()), l, self.group));
        }
        let mut seen: BTreeMap<&str, u32> = BTreeMap::new();
        for c in &self.children {
            let k = seen.entry(c.tag).or_insert(0);
            *k += 1;
            path.push(XPathUnit::new(c.tag, *k).expect("generator tags are valid"));
            c.collect(path, out);
            path.pop();
        }
    }
}

fn escape(text: &str, out: &mut String) {
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
}

fn pick<R: Rng>(rng: &mut R, items: &[&'static str]) -> &'static str {
    items.choose(rng).expect("non-empty list")
}

struct Page {
    title: String,
    headline: String,
    theme: usize,
}

fn page_shell<R: Rng>(spec: &GenSpec, rng: &mut R, dom: &Domain, page: &Page, content: Vec<El>) -> El {
    let mut main = El::new("main");
    if rng.random_bool(spec.include(AttributeLabel::Headline)) {
        main = main.child(El::text("h1", page.headline.clone()).label(AttributeLabel::Headline));
    }
    if rng.random_bool(spec.include(AttributeLabel::ArticleParagraph)) {
        let intro = format!(
            "We tested the latest {} to find the best picks for every budget.",
            THEMES[page.theme].0.to_lowercase()
        );
        main = main.child(El::text("p", intro).label(AttributeLabel::ArticleParagraph));
    }
    let mut holder = content;
    for _ in 0..dom.wrappers {
        let mut div = El::new("div").attr("class=\"wrap\"");
        div.children = holder;
        holder = vec![div];
    }
    main.children.extend(holder);

    let header = El::new("header").child(
        El::new("nav")
            .child(El::text("a", "Home").attr("href=\"/\""))
            .child(El::text("a", "Reviews").attr("href=\"/reviews\"")),
    );
    let aside = El::new("aside").child(El::text("a", "Subscribe").attr("href=\"/subscribe\""));
    let footer = El::new("footer").child(El::text("p", "All prices were accurate at the time of publishing."));
    El::new("html")
        .child(El::new("head").child(El::text("title", page.title.clone())))
        .child(El::new("body").child(header).child(main).child(aside).child(footer))
}

fn review_paragraph<R: Rng>(spec: &GenSpec, rng: &mut R, name: &str) -> El {
    let text = format!("The {name} {}, though {}.", pick(rng, PRAISE), pick(rng, CAVEATS));
    let mut p = El::text("p", text).label(AttributeLabel::ProductReview);
    if rng.random_bool(spec.review_link_prob) {
        p = p.child(El::text("a", "read our full test").attr("href=\"/guide\""));
    }
    p
}

fn link<R: Rng>(spec: &GenSpec, rng: &mut R, dom: &Domain, slug: &str) -> El {
    let href = format!("href=\"https://shop.example/{slug}\"");
    let a = if rng.random_bool(spec.span_link_prob) {
        El::new("a").attr(&href).child(El::text("span", dom.link_phrase))
    } else {
        El::text("a", dom.link_phrase).attr(&href)
    };
    El::new("div").child(a.label(AttributeLabel::ProductLink))
}

fn maybe<R: Rng>(spec: &GenSpec, rng: &mut R, label: AttributeLabel, el: El, into: &mut Vec<El>) {
    if rng.random_bool(spec.include(label)) {
        into.push(el.label(label));
    }
}

/// Core product fields shared by both page kinds, name first.
fn product_fields<R: Rng>(
    spec: &GenSpec,
    rng: &mut R,
    dom: &Domain,
    theme: usize,
    ordinal: Option<usize>,
) -> (String, Vec<El>) {
    let brand = pick(rng, BRANDS);
    let noun = pick(rng, THEMES[theme].1);
    let name = format!("{brand} {} {noun}", pick(rng, ADJECTIVES));
    let mut els = vec![El::text(dom.name_tag, name.clone()).label(AttributeLabel::ProductName)];
    if let Some(k) = ordinal {
        maybe(spec, rng, AttributeLabel::ProductOrdinal, El::text("b", format!("{k}.")), &mut els);
    }
    let hook = pick(rng, HOOKS);
    maybe(spec, rng, AttributeLabel::ProductHook, El::text("em", hook), &mut els);
    let price = format!("${}.{:02}", rng.random_range(15..400), [0, 49, 95, 99][rng.random_range(0..4)]);
    maybe(spec, rng, AttributeLabel::ProductPrice, El::text("strong", price), &mut els);
    maybe(spec, rng, AttributeLabel::ProductBrand, El::text("small", brand), &mut els);
    let seller = pick(rng, SELLERS);
    maybe(spec, rng, AttributeLabel::ProductSeller, El::text("i", seller), &mut els);
    if rng.random_bool(spec.include(AttributeLabel::ProductLink)) {
        let slug = name.to_lowercase().replace(' ', "-");
        els.push(link(spec, rng, dom, &slug));
    }
    (name, els)
}

fn container(dom: &Domain, children: Vec<El>) -> El {
    let mut c = El::new(dom.container).label(AttributeLabel::ProductContainer);
    c.children = children;
    c
}

fn finish(spec: &GenSpec, rng: &mut ChaCha8Rng, page_id: &str, kind: PageKind, root: El) -> AnnotatedPage {
    let mut html = String::from("<!DOCTYPE html>\n");
    root.render(&mut html);
    html.push('\n');
    let mut labeled = Vec::new();
    root.collect(&mut vec![XPathUnit::new("html", 1).expect("valid")], &mut labeled);
    let mut gold = BTreeMap::new();
    let mut gold_groups = BTreeMap::new();
    for (x, l, g) in labeled {
        if let Some(g) = g {
            gold_groups.insert(x.clone(), g);
        }
        // drawn for every label so noise does not shift later draws
        let keep = !rng.random_bool(spec.label_noise);
        if keep {
            gold.insert(x, l);
        }
    }
    AnnotatedPage {
        page_id: page_id.to_string(),
        html,
        gold,
        gold_groups,
        kind,
    }
}

fn page_meta<R: Rng>(rng: &mut R) -> Page {
    let theme = rng.random_range(0..THEMES.len());
    let year = rng.random_range(2019..2025);
    Page {
        title: format!("{} Reviews", THEMES[theme].0),
        headline: format!("The {} Best {} of {year}", rng.random_range(3..12), THEMES[theme].0),
        theme,
    }
}

/// One product with pros, cons, reviews and an optional bottom line.
pub fn generate_detail_page(spec: &GenSpec, rng: &mut ChaCha8Rng, page_id: &str, domain_id: usize) -> AnnotatedPage {
    let dom = domain(domain_id);
    let page = page_meta(rng);
    let (name, mut els) = product_fields(spec, rng, &dom, page.theme, None);
    for _ in 0..rng.random_range(1..=3) {
        els.push(review_paragraph(spec, rng, &name));
    }
    if rng.random_bool(spec.include(AttributeLabel::ProductPros)) {
        let mut ul = El::new("ul");
        let k = rng.random_range(2..=4);
        for item in PROS_ITEMS.choose_multiple(rng, k) {
            ul = ul.child(El::text("li", *item).label(AttributeLabel::ProductPros));
        }
        els.push(
            El::new("div")
                .child(El::text("h4", PROS_HEADING).label(AttributeLabel::ProductProsLabel))
                .child(ul),
        );
    }
    if rng.random_bool(spec.include(AttributeLabel::ProductCons)) {
        let mut ol = El::new("ol");
        let k = rng.random_range(1..=3);
        for item in CONS_ITEMS.choose_multiple(rng, k) {
            ol = ol.child(El::text("li", *item).label(AttributeLabel::ProductCons));
        }
        els.push(
            El::new("div")
                .child(El::text("h4", CONS_HEADING).label(AttributeLabel::ProductConsLabel))
                .child(ol),
        );
    }
    if rng.random_bool(spec.include(AttributeLabel::ProductBottomLine)) {
        let verdict = format!("If you want a dependable pick, the {name} is worth it.");
        els.push(El::text("h4", dom.bottom_line).label(AttributeLabel::ProductBottomLineLabel));
        els.push(El::text("blockquote", verdict).label(AttributeLabel::ProductBottomLine));
    }
    let mut c = container(&dom, els);
    c.set_group(0);
    let root = page_shell(spec, rng, &dom, &page, vec![c]);
    finish(spec, rng, page_id, PageKind::Detail, root)
}

/// Several products, each in its own container and group.
pub fn generate_list_page(spec: &GenSpec, rng: &mut ChaCha8Rng, page_id: &str, domain_id: usize) -> AnnotatedPage {
    let dom = domain(domain_id);
    let page = page_meta(rng);
    let (lo, hi) = spec.products_per_list;
    let n = rng.random_range(lo..=hi);
    let mut products = Vec::with_capacity(n);
    for k in 0..n {
        let (name, mut els) = product_fields(spec, rng, &dom, page.theme, Some(k + 1));
        els.push(review_paragraph(spec, rng, &name));
        let mut c = container(&dom, els);
        c.set_group(k as i64);
        products.push(c);
    }
    let root = page_shell(spec, rng, &dom, &page, products);
    finish(spec, rng, page_id, PageKind::List, root)
}

pub fn page_id_for(index: usize) -> String {
    format!("p{index:05}")
}

pub fn generate_corpus(spec: &GenSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut corpus = Corpus::default();
    for i in 0..spec.n_pages {
        let mut rng = spec.page_rng(i);
        let page_id = page_id_for(i);
        let domain_id = spec.domain_of(i);
        let kind = if rng.random_bool(spec.list_ratio) {
            PageKind::List
        } else {
            PageKind::Detail
        };
        let page = match kind {
            PageKind::Detail => generate_detail_page(spec, &mut rng, &page_id, domain_id),
            PageKind::List => generate_list_page(spec, &mut rng, &page_id, domain_id),
        };
        corpus.manifest.entries.push(ManifestEntry {
            path: format!("pages/{page_id}.html"),
            page_id,
            kind,
            split: spec.split_of_domain(domain_id),
            domain_id,
        });
        corpus.pages.push(page);
    }
    Ok(corpus)
}

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const GOLD_FILE: &str = "gold.tsv";
pub const GROUPS_FILE: &str = "groups.tsv";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes page files, `gold.tsv`, `groups.tsv` and `manifest.tsv` under
/// `dir`, creating it if needed.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    if corpus.pages.len() != corpus.manifest.entries.len() {
        return Err(Error::InvalidConfig(format!(
            "{} pages but {} manifest entries",
            corpus.pages.len(),
            corpus.manifest.entries.len()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    let mut gold = Vec::new();
    let mut groups = Vec::new();
    for (page, entry) in corpus.pages.iter().zip(&corpus.manifest.entries) {
        let path = dir.join(&entry.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_file(&path, &page.html)?;
        let _ = writeln!(
            manifest,
            "{}\t{}\t{}\t{}\t{}",
            entry.path,
            entry.page_id,
            entry.kind.as_str(),
            entry.split.as_str(),
            entry.domain_id
        );
        gold.extend(page.gold.iter().map(|(x, &l)| (page.page_id.clone(), x.clone(), l)));
        groups.extend(page.gold_groups.iter().map(|(x, &g)| (page.page_id.clone(), x.clone(), g)));
    }
    write_file(&dir.join(GOLD_FILE), &write_gold(&gold))?;
    write_file(&dir.join(GROUPS_FILE), &write_gold_groups(&groups))?;
    write_file(&dir.join(MANIFEST_FILE), &manifest)
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut entries = Vec::new();
    let mut ids = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedManifest { line, reason };
        let f: Vec<&str> = raw.split('\t').collect();
        if f.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", f.len())));
        }
        if f[0].is_empty() || f[0].starts_with('/') || f[0].split('/').any(|c| c == "..") {
            return Err(bad(format!("page path {:?} must be relative to the corpus", f[0])));
        }
        if f[1].is_empty() || f[1].chars().any(char::is_whitespace) {
            return Err(bad(format!("invalid page id {:?}", f[1])));
        }
        if !ids.insert(f[1].to_string()) {
            return Err(bad(format!("duplicate page id {:?}", f[1])));
        }
        entries.push(ManifestEntry {
            path: f[0].to_string(),
            page_id: f[1].to_string(),
            kind: f[2].parse().map_err(|_| bad(format!("invalid kind {:?}", f[2])))?,
            split: f[3].parse().map_err(|_| bad(format!("invalid split {:?}", f[3])))?,
            domain_id: f[4].parse().map_err(|_| bad(format!("invalid domain id {:?}", f[4])))?,
        });
    }
    Ok(Manifest { entries })
}

/// Reads a corpus written by [`save_corpus`], checking that every gold and
/// group XPath resolves in its reparsed page.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let manifest = parse_manifest(&read_file(&dir.join(MANIFEST_FILE))?)?;
    let gold = parse_label_records(&read_file(&dir.join(GOLD_FILE))?)?;
    let groups = parse_gold_groups(&read_file(&dir.join(GROUPS_FILE))?)?;

    let index: BTreeMap<&str, usize> = manifest
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.page_id.as_str(), i))
        .collect();
    let mut pages: Vec<AnnotatedPage> = Vec::with_capacity(manifest.entries.len());
    let mut trees = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let html = read_file(&dir.join(&e.path))?;
        trees.push(parse_html(&html, &e.page_id)?);
        pages.push(AnnotatedPage {
            page_id: e.page_id.clone(),
            html,
            gold: BTreeMap::new(),
            gold_groups: BTreeMap::new(),
            kind: e.kind,
        });
    }
    let locate = |page_id: &str, xpath: &XPath| -> Result<usize> {
        let dangling = || Error::DanglingGoldXPath {
            page_id: page_id.to_string(),
            xpath: xpath.to_string(),
        };
        let &i = index.get(page_id).ok_or_else(dangling)?;
        trees[i].resolve(xpath).ok_or_else(dangling)?;
        Ok(i)
    };
    for r in gold {
        let i = locate(&r.page_id, &r.xpath)?;
        pages[i].gold.insert(r.xpath, r.label);
    }
    for (page_id, xpath, g) in groups {
        let i = locate(&page_id, &xpath)?;
        pages[i].gold_groups.insert(xpath, g);
    }
    Ok(Corpus { pages, manifest })
}

/// Rules that reproduce the generator's labeling exactly (before label
/// noise) when applied with [`crate::dom::SerializationPolicy::RetainInternal`].
pub fn oracle_rules() -> RuleSet {
    use AttributeLabel as L;
    let one_of = |xs: &[&str]| TextPredicate::OneOf(xs.iter().map(|s| s.to_string()).collect());
    let any = || TextPredicate::Any;
    RuleSet::new(vec![
        Rule::new(&["h1"], any(), L::Headline),
        Rule::new(&["main", "p"], any(), L::ArticleParagraph),
        Rule::new(&["article"], any(), L::ProductContainer),
        Rule::new(&["section"], any(), L::ProductContainer),
        Rule::new(&["h2"], any(), L::ProductName),
        Rule::new(&["h3"], any(), L::ProductName),
        Rule::new(&["b"], any(), L::ProductOrdinal),
        Rule::new(&["em"], any(), L::ProductHook),
        Rule::new(&["strong"], any(), L::ProductPrice),
        Rule::new(&["small"], any(), L::ProductBrand),
        Rule::new(&["i"], any(), L::ProductSeller),
        Rule::new(&["div", "a"], any(), L::ProductLink),
        Rule::new(&["h4"], one_of(PROS_HEADINGS), L::ProductProsLabel),
        Rule::new(&["h4"], one_of(CONS_HEADINGS), L::ProductConsLabel),
        Rule::new(&["h4"], one_of(BOTTOM_LINE_PHRASES), L::ProductBottomLineLabel),
        Rule::new(&["ul", "li"], any(), L::ProductPros),
        Rule::new(&["ol", "li"], any(), L::ProductCons),
        Rule::new(&["blockquote"], any(), L::ProductBottomLine),
        Rule::new(&["article", "p"], any(), L::ProductReview),
        Rule::new(&["section", "p"], any(), L::ProductReview),
    ])
}
