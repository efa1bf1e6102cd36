//! Command-line experiments over the extraction toolkit.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for invalid or
//! inconsistent input data, 3 for runtime failures (IO, non-finite loss).

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use wie_core::corpus::{generate_corpus, load_corpus, save_corpus, Corpus, GenSpec, Split};
use wie_core::dom::{parse_html, SerializationPolicy};
use wie_core::evaluation::{evaluate, gold_from_records, render_report, GoldMap, ReportFormat};
use wie_core::formats::{parse_label_records, parse_predictions, write_group_records, write_predictions, GroupRecord};
use wie_core::postprocess::{run_pipeline, PostConfig};
use wie_core::tagger::{build_vocab, init_model, predict_page, train_corpus, Prediction, TaggerConfig, TaggerModel, TrainingPage};

#[derive(Debug, Parser)]
#[command(name = "wie", version, about = "Product attribute extraction experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic annotated corpus.
    Generate(GenerateArgs),
    /// Train a tagger on the train split of a corpus.
    Train(TrainArgs),
    /// Tag corpus pages with a trained model.
    Extract(ExtractArgs),
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub pages: usize,
    #[arg(long, default_value_t = 0.7)]
    pub list_ratio: f64,
    /// Probability a product link is authored as `<a><span>..</span></a>`.
    #[arg(long, default_value_t = 0.5)]
    pub span_prob: f64,
    /// Probability that a gold label is dropped.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 2)]
    pub min_products: usize,
    #[arg(long, default_value_t = 10)]
    pub max_products: usize,
    #[arg(long, default_value_t = 8)]
    pub domains: usize,
    #[arg(long, default_value_t = 2)]
    pub test_domains: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Leaf nodes only.
    Leaf,
    /// All nodes, internal ones as tag markers.
    Full,
}

impl From<Mode> for SerializationPolicy {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Leaf => SerializationPolicy::LeafOnly,
            Mode::Full => SerializationPolicy::RetainInternal,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint output path.
    #[arg(long)]
    pub model: PathBuf,
    /// Per-epoch loss log (`epoch TAB loss`).
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    pub max_tokens: usize,
    #[arg(long, default_value_t = 256)]
    pub stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

impl SplitArg {
    fn admits(self, s: Split) -> bool {
        match self {
            SplitArg::Train => s == Split::Train,
            SplitArg::Test => s == Split::Test,
            SplitArg::All => true,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Bypass post-processing entirely.
    #[arg(long, conflicts_with_all = ["no_link_norm", "no_nested_elim", "no_grouping"])]
    pub no_post: bool,
    #[arg(long)]
    pub no_link_norm: bool,
    #[arg(long)]
    pub no_nested_elim: bool,
    #[arg(long)]
    pub no_grouping: bool,
    /// Predictions output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Group records output path, written when grouping runs.
    #[arg(long)]
    pub groups_out: Option<PathBuf>,
}

impl ExtractArgs {
    pub fn post_config(&self) -> Option<PostConfig> {
        (!self.no_post).then(|| PostConfig {
            enable_link_norm: !self.no_link_norm,
            enable_nested_elim: !self.no_nested_elim,
            enable_grouping: !self.no_grouping,
            ..PostConfig::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Table,
    Tsv,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Restrict gold to pages of this split of `--corpus`.
    #[arg(long, value_enum, requires = "corpus")]
    pub split: Option<SplitArg>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    pub format: FormatArg,
    /// Model name printed in the report; defaults to the prediction file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A flag combination that is syntactically valid but unusable.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Maps an error chain to an exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<wie_core::Error>() {
            return if e.is_data_error() { 2 } else { 3 };
        }
    }
    3
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn dispatch(cmd: Command) -> anyhow::Result<String> {
    match cmd {
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
    }
}

fn check_unit(name: &str, v: f64) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(usage(format!("--{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

pub fn gen_spec(a: &GenerateArgs) -> anyhow::Result<GenSpec> {
    check_unit("list-ratio", a.list_ratio)?;
    check_unit("span-prob", a.span_prob)?;
    check_unit("noise", a.noise)?;
    if a.min_products == 0 || a.min_products > a.max_products {
        return Err(usage("--min-products must be >= 1 and <= --max-products"));
    }
    if a.domains == 0 || a.test_domains > a.domains {
        return Err(usage("--domains must be >= 1 and >= --test-domains"));
    }
    Ok(GenSpec {
        seed: a.seed,
        n_pages: a.pages,
        list_ratio: a.list_ratio,
        products_per_list: (a.min_products, a.max_products),
        span_link_prob: a.span_prob,
        label_noise: a.noise,
        n_domains: a.domains,
        test_domains: a.test_domains,
        ..GenSpec::default()
    })
}

pub fn cmd_generate(a: &GenerateArgs) -> anyhow::Result<String> {
    let spec = gen_spec(a)?;
    let corpus = generate_corpus(&spec)?;
    save_corpus(&corpus, &a.out)?;
    Ok(corpus_summary(&corpus))
}

/// Counts printed after generation.
pub fn corpus_summary(c: &Corpus) -> String {
    let kinds = |k| c.pages.iter().filter(|p| p.kind == k).count();
    let gold: usize = c.pages.iter().map(|p| p.gold.len()).sum();
    let groups: usize = c
        .pages
        .iter()
        .map(|p| p.gold_groups.values().collect::<BTreeSet<_>>().len())
        .sum();
    let mut s = String::new();
    let _ = writeln!(s, "pages\t{}", c.pages.len());
    let _ = writeln!(s, "detail\t{}", kinds(wie_core::corpus::PageKind::Detail));
    let _ = writeln!(s, "list\t{}", kinds(wie_core::corpus::PageKind::List));
    let _ = writeln!(s, "train\t{}", c.manifest.count(Split::Train));
    let _ = writeln!(s, "test\t{}", c.manifest.count(Split::Test));
    let _ = writeln!(s, "gold_labels\t{gold}");
    let _ = writeln!(s, "product_groups\t{groups}");
    s
}

/// Training hyperparameters shared by the CLI and experiments.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub policy: SerializationPolicy,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub max_tokens: usize,
    pub stride: usize,
}

pub fn training_pages(corpus: &Corpus, split: SplitArg) -> wie_core::Result<Vec<TrainingPage>> {
    corpus
        .pages
        .iter()
        .zip(&corpus.manifest.entries)
        .filter(|(_, e)| split.admits(e.split))
        .map(|(p, _)| p.training_page())
        .collect()
}

/// Builds the vocabulary, initializes from `seed`, and trains over the train
/// split in manifest order.
pub fn train_model(
    corpus: &Corpus,
    opts: &TrainOptions,
    on_epoch: impl FnMut(usize, f64),
) -> wie_core::Result<(TaggerModel, Vec<f64>)> {
    let config = TaggerConfig {
        policy: opts.policy,
        max_tokens: opts.max_tokens,
        stride: opts.stride,
        ..TaggerConfig::default()
    };
    config.validate()?;
    let pages = training_pages(corpus, SplitArg::Train)?;
    let vocab = build_vocab(&pages, config.policy, config.word_min_count);
    let mut model = init_model(config, vocab, opts.seed)?;
    let losses = train_corpus(&mut model, &pages, opts.epochs, opts.lr, on_epoch)?;
    Ok((model, losses))
}

pub fn cmd_train(a: &TrainArgs) -> anyhow::Result<String> {
    if !(a.lr.is_finite() && a.lr >= 0.0) {
        return Err(usage(format!("--lr must be finite and >= 0, got {}", a.lr)));
    }
    if a.stride == 0 || a.max_tokens == 0 || a.stride > a.max_tokens {
        return Err(usage("--stride must lie in 1..=--max-tokens"));
    }
    let corpus = load_corpus(&a.corpus)?;
    let opts = TrainOptions {
        policy: a.mode.into(),
        epochs: a.epochs,
        lr: a.lr,
        seed: a.seed,
        max_tokens: a.max_tokens,
        stride: a.stride,
    };
    let (model, losses) = train_model(&corpus, &opts, |_, _| {})?;
    write_text(&a.model, &model.to_checkpoint())?;
    let mut log = String::from("epoch\tloss\n");
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(log, "{}\t{l}", i + 1);
    }
    if let Some(p) = &a.loss_log {
        write_text(p, &log)?;
    }
    let mut s = format!(
        "trained {} epochs on {} pages ({} parameters)\n",
        losses.len(),
        corpus.manifest.count(Split::Train),
        model.params.param_count()
    );
    if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
        let _ = writeln!(s, "loss\t{first:.6}\t->\t{last:.6}");
    }
    Ok(s)
}

/// Predictions and group records over the pages of `split`, in manifest
/// order. `post = None` returns raw tagger output.
pub fn extract(
    corpus: &Corpus,
    model: &TaggerModel,
    split: SplitArg,
    threshold: f64,
    post: Option<&PostConfig>,
) -> wie_core::Result<(Vec<Prediction>, Vec<GroupRecord>)> {
    let mut preds = Vec::new();
    let mut groups = Vec::new();
    for (page, entry) in corpus.pages.iter().zip(&corpus.manifest.entries) {
        if !split.admits(entry.split) {
            continue;
        }
        let tree = parse_html(&page.html, &page.page_id)?;
        let raw = predict_page(model, &tree, model.config.policy, threshold)?;
        match post {
            None => preds.extend(raw),
            Some(cfg) => {
                let (p, g) = run_pipeline(&raw, &tree, cfg);
                preds.extend(p);
                for group in g {
                    groups.extend(group.members.into_iter().map(|m| GroupRecord {
                        page_id: page.page_id.clone(),
                        group_id: group.group_id,
                        prediction: m,
                    }));
                }
            }
        }
    }
    Ok((preds, groups))
}

pub fn cmd_extract(a: &ExtractArgs) -> anyhow::Result<String> {
    if !(0.0..1.0).contains(&a.threshold) {
        return Err(usage(format!("--threshold must lie in [0, 1), got {}", a.threshold)));
    }
    let post = a.post_config();
    if a.groups_out.is_some() && !post.as_ref().is_some_and(|p| p.enable_grouping) {
        return Err(usage("--groups-out requires grouping to be enabled"));
    }
    let corpus = load_corpus(&a.corpus)?;
    let text = read_text(&a.model)?;
    let model = TaggerModel::from_checkpoint(&text).with_context(|| format!("loading {}", a.model.display()))?;
    let (preds, groups) = extract(&corpus, &model, a.split, a.threshold, post.as_ref())?;
    write_text(&a.out, &write_predictions(&preds))?;
    if let Some(p) = &a.groups_out {
        write_text(p, &write_group_records(&groups))?;
    }
    let n_groups: BTreeSet<(&str, i64)> = groups.iter().map(|g| (g.page_id.as_str(), g.group_id)).collect();
    Ok(format!("predictions\t{}\ngroups\t{}\n", preds.len(), n_groups.len()))
}

/// Gold restricted to the page ids of `split` when a corpus is given.
pub fn load_gold(path: &Path, corpus: Option<&Corpus>, split: Option<SplitArg>) -> anyhow::Result<GoldMap> {
    let records = parse_label_records(&read_text(path)?).with_context(|| format!("reading {}", path.display()))?;
    let mut gold = gold_from_records(&records);
    if let (Some(c), Some(s)) = (corpus, split) {
        let keep: BTreeSet<&str> = c
            .manifest
            .entries
            .iter()
            .filter(|e| s.admits(e.split))
            .map(|e| e.page_id.as_str())
            .collect();
        gold.retain(|(page, _), _| keep.contains(page.as_str()));
    }
    Ok(gold)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> anyhow::Result<String> {
    let corpus = a.corpus.as_deref().map(load_corpus).transpose()?;
    let gold = load_gold(&a.gold, corpus.as_ref(), a.split)?;
    let preds = parse_predictions(&read_text(&a.pred)?).with_context(|| format!("reading {}", a.pred.display()))?;
    let name = a.name.clone().unwrap_or_else(|| {
        a.pred
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into())
    });
    let report = evaluate(&name, &gold, &preds)?;
    let fmt = match a.format {
        FormatArg::Table => ReportFormat::Table,
        FormatArg::Tsv => ReportFormat::Tsv,
    };
    let text = render_report(&report, fmt);
    match &a.out {
        Some(p) => {
            write_text(p, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| wie_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    }.into())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| wie_core::Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| {
        wie_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}
