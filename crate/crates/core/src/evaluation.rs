//! Exact-match node scoring per attribute, micro and macro averages, and
//! report rendering.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::dom::XPath;
use crate::error::{Error, Result};
use crate::formats::LabelRecord;
use crate::labels::{AttributeLabel, NUM_ATTRIBUTES};
use crate::tagger::Prediction;

/// Gold annotations keyed by page and canonical XPath.
pub type GoldMap = BTreeMap<(String, XPath), AttributeLabel>;

pub fn gold_from_records(records: &[LabelRecord]) -> GoldMap {
    records
        .iter()
        .map(|r| ((r.page_id.clone(), r.xpath.clone()), r.label))
        .collect()
}

/// Confusion counts for one label. True negatives are not tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelCounts {
    pub label: AttributeLabel,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl LabelCounts {
    pub fn new(label: AttributeLabel, tp: u64, fp: u64, fn_: u64) -> Self {
        LabelCounts { label, tp, fp, fn_ }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub const MACRO_NAME: &str = "Macro-Average";
pub const MICRO_NAME: &str = "Micro-Average";

/// Per-label rows in schema order followed by the two aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub model: String,
    pub rows: Vec<MetricRow>,
    pub macro_avg: MetricRow,
    pub micro_avg: MetricRow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Tsv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "tsv" => Ok(ReportFormat::Tsv),
            other => Err(Error::InvalidConfig(format!("unknown report format {other:?}"))),
        }
    }
}

/// Counts one tally per label over the 17 attributes, in schema order.
///
/// A prediction with the wrong label is a false positive for its own label
/// and a false negative for the gold label.
pub fn match_predictions(gold: &GoldMap, preds: &[Prediction]) -> Result<Vec<LabelCounts>> {
    let mut seen: HashSet<(&str, &XPath)> = HashSet::with_capacity(preds.len());
    let mut by_key: HashMap<(&str, &XPath), AttributeLabel> = HashMap::with_capacity(preds.len());
    for p in preds {
        if !seen.insert((p.page_id.as_str(), &p.xpath)) {
            return Err(Error::DuplicatePrediction {
                page_id: p.page_id.clone(),
                xpath: p.xpath.to_string(),
            });
        }
        by_key.insert((p.page_id.as_str(), &p.xpath), p.label);
    }

    let mut counts: Vec<LabelCounts> = AttributeLabel::attributes()
        .iter()
        .map(|&l| LabelCounts::new(l, 0, 0, 0))
        .collect();
    for p in preds {
        match gold.get(&(p.page_id.clone(), p.xpath.clone())) {
            Some(&g) if g == p.label => counts[p.label.index()].tp += 1,
            _ => counts[p.label.index()].fp += 1,
        }
    }
    for ((page, xpath), &g) in gold {
        if g.is_none() {
            continue;
        }
        if by_key.get(&(page.as_str(), xpath)) != Some(&g) {
            counts[g.index()].fn_ += 1;
        }
    }
    Ok(counts)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn prf_from_counts(c: &LabelCounts) -> MetricRow {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    MetricRow {
        name: c.label.as_str().to_string(),
        precision,
        recall,
        f1: f1_score(precision, recall),
    }
}

pub fn micro_average(counts: &[LabelCounts]) -> MetricRow {
    let (tp, fp, fn_) = counts
        .iter()
        .fold((0, 0, 0), |(a, b, c), x| (a + x.tp, b + x.fp, c + x.fn_));
    let mut row = prf_from_counts(&LabelCounts::new(AttributeLabel::None, tp, fp, fn_));
    row.name = MICRO_NAME.to_string();
    row
}

/// Unweighted column means over exactly 17 label rows.
pub fn macro_average(rows: &[MetricRow]) -> Result<MetricRow> {
    if rows.len() != NUM_ATTRIBUTES {
        return Err(Error::WrongRowCount {
            expected: NUM_ATTRIBUTES,
            got: rows.len(),
        });
    }
    let n = rows.len() as f64;
    Ok(MetricRow {
        name: MACRO_NAME.to_string(),
        precision: rows.iter().map(|r| r.precision).sum::<f64>() / n,
        recall: rows.iter().map(|r| r.recall).sum::<f64>() / n,
        f1: rows.iter().map(|r| r.f1).sum::<f64>() / n,
    })
}

pub fn report_from_counts(model: &str, counts: &[LabelCounts]) -> Result<Report> {
    let rows: Vec<MetricRow> = counts.iter().map(prf_from_counts).collect();
    let macro_avg = macro_average(&rows)?;
    Ok(Report {
        model: model.to_string(),
        macro_avg,
        micro_avg: micro_average(counts),
        rows,
    })
}

pub fn evaluate(model: &str, gold: &GoldMap, preds: &[Prediction]) -> Result<Report> {
    report_from_counts(model, &match_predictions(gold, preds)?)
}

impl Report {
    /// Looks up a per-label row.
    pub fn row(&self, label: AttributeLabel) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.name == label.as_str())
    }

    pub fn all_rows(&self) -> impl Iterator<Item = &MetricRow> {
        self.rows.iter().chain([&self.macro_avg, &self.micro_avg])
    }
}

pub fn render_report(report: &Report, format: ReportFormat) -> String {
    let mut s = String::new();
    match format {
        ReportFormat::Table => {
            let width = report
                .all_rows()
                .map(|r| r.name.len())
                .max()
                .unwrap_or(0)
                .max("Attribute".len());
            let _ = writeln!(s, "Model: {}", report.model);
            let _ = writeln!(s, "{:<width$}  {:>9}  {:>6}  {:>6}", "Attribute", "Precision", "Recall", "F1");
            for r in report.all_rows() {
                let _ = writeln!(
                    s,
                    "{:<width$}  {:>9.3}  {:>6.3}  {:>6.3}",
                    r.name, r.precision, r.recall, r.f1
                );
            }
        }
        ReportFormat::Tsv => {
            let _ = writeln!(s, "model\t{}", report.model);
            let _ = writeln!(s, "attribute\tprecision\trecall\tf1");
            for r in report.all_rows() {
                let _ = writeln!(s, "{}\t{:.3}\t{:.3}\t{:.3}", r.name, r.precision, r.recall, r.f1);
            }
        }
    }
    s
}

fn report_err(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

/// Reads back the TSV rendering.
pub fn parse_report_tsv(text: &str) -> Result<Report> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let model = match lines.next() {
        Some((_, l)) => l
            .strip_prefix("model\t")
            .ok_or_else(|| report_err(1, "expected model line"))?
            .to_string(),
        None => return Err(report_err(1, "empty report")),
    };
    match lines.next() {
        Some((_, "attribute\tprecision\trecall\tf1")) => {}
        Some((i, _)) => return Err(report_err(i + 1, "expected header")),
        None => return Err(report_err(2, "missing header")),
    }
    let mut rows = Vec::new();
    for (i, l) in lines {
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 4 {
            return Err(report_err(i + 1, format!("expected 4 fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| report_err(i + 1, format!("invalid number {s:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(report_err(i + 1, format!("metric {v} outside [0,1]")));
            }
            Ok(v)
        };
        rows.push(MetricRow {
            name: f[0].to_string(),
            precision: num(f[1])?,
            recall: num(f[2])?,
            f1: num(f[3])?,
        });
    }
    if rows.len() != NUM_ATTRIBUTES + 2 {
        return Err(Error::WrongRowCount {
            expected: NUM_ATTRIBUTES + 2,
            got: rows.len(),
        });
    }
    let micro_avg = rows.pop().expect("length checked");
    let macro_avg = rows.pop().expect("length checked");
    for (r, l) in rows.iter().zip(AttributeLabel::attributes()) {
        if r.name != l.as_str() {
            return Err(Error::UnknownLabel(r.name.clone()));
        }
    }
    if macro_avg.name != MACRO_NAME || micro_avg.name != MICRO_NAME {
        return Err(report_err(0, "aggregate rows out of order"));
    }
    Ok(Report {
        model,
        rows,
        macro_avg,
        micro_avg,
    })
}

/// Adjusted Rand index between two labelings of the same items.
///
/// Degenerate cases where the expected index equals its maximum (for example
/// a single cluster on both sides) score 1 when the partitions agree and 0
/// otherwise.
pub fn adjusted_rand_index<A: Ord + Clone, B: Ord + Clone>(a: &[A], b: &[B]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len() as f64;
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut joint: BTreeMap<(A, B), f64> = BTreeMap::new();
    let mut ra: BTreeMap<A, f64> = BTreeMap::new();
    let mut rb: BTreeMap<B, f64> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *joint.entry((x.clone(), y.clone())).or_default() += 1.0;
        *ra.entry(x.clone()).or_default() += 1.0;
        *rb.entry(y.clone()).or_default() += 1.0;
    }
    let index: f64 = joint.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ra.values().map(|&c| choose2(c)).sum();
    let sb: f64 = rb.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    let expected = if total == 0.0 { 0.0 } else { sa * sb / total };
    let max = (sa + sb) / 2.0;
    if max == expected {
        let same = joint.len() == ra.len() && joint.len() == rb.len();
        return if same { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}
