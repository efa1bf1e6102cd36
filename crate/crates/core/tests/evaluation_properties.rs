use proptest::prelude::*;
use wie_core::dom::parse_xpath;
use wie_core::evaluation::{
    evaluate, f1_score, macro_average, match_predictions, micro_average, parse_report_tsv, prf_from_counts,
    render_report, report_from_counts, GoldMap, LabelCounts, MetricRow, ReportFormat,
};
use wie_core::tagger::Prediction;
use wie_core::AttributeLabel;

fn label(i: usize) -> AttributeLabel {
    AttributeLabel::attributes()[i % 17]
}

fn key(page: u8, node: u8) -> (String, String) {
    (format!("p{page}"), format!("/html/div[{}]", node as u32 + 1))
}

fn build(gold_raw: &[(u8, u8, usize)], pred_raw: &[(u8, u8, usize)]) -> (GoldMap, Vec<Prediction>) {
    let gold: GoldMap = gold_raw
        .iter()
        .map(|&(p, n, l)| {
            let (page, x) = key(p, n);
            ((page, parse_xpath(&x).unwrap()), label(l))
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    let preds = pred_raw
        .iter()
        .filter(|&&(p, n, _)| seen.insert((p, n)))
        .map(|&(p, n, l)| {
            let (page, x) = key(p, n);
            Prediction {
                page_id: page,
                xpath: parse_xpath(&x).unwrap(),
                label: label(l),
                score: 0.5,
            }
        })
        .collect();
    (gold, preds)
}

/// Tallies every (key, label) decision independently.
fn brute_counts(gold: &GoldMap, preds: &[Prediction]) -> Vec<(u64, u64, u64)> {
    AttributeLabel::attributes()
        .iter()
        .map(|&l| {
            let predicted: Vec<_> = preds.iter().filter(|p| p.label == l).collect();
            let tp = predicted
                .iter()
                .filter(|p| gold.get(&(p.page_id.clone(), p.xpath.clone())) == Some(&l))
                .count() as u64;
            let fp = predicted.len() as u64 - tp;
            let fn_ = gold
                .iter()
                .filter(|(_, g)| **g == l)
                .filter(|(k, _)| !preds.iter().any(|p| p.page_id == k.0 && p.xpath == k.1 && p.label == l))
                .count() as u64;
            (tp, fp, fn_)
        })
        .collect()
}

fn entries() -> impl Strategy<Value = Vec<(u8, u8, usize)>> {
    prop::collection::vec((0u8..3, 0u8..12, 0usize..17), 0..40)
}

proptest! {
    #[test]
    fn counts_match_brute_force(g in entries(), p in entries()) {
        let (gold, preds) = build(&g, &p);
        let counts = match_predictions(&gold, &preds).unwrap();
        let brute = brute_counts(&gold, &preds);
        for (c, b) in counts.iter().zip(&brute) {
            prop_assert_eq!((c.tp, c.fp, c.fn_), *b);
        }
        let tp_fp: u64 = counts.iter().map(|c| c.tp + c.fp).sum();
        let tp_fn: u64 = counts.iter().map(|c| c.tp + c.fn_).sum();
        prop_assert_eq!(tp_fp as usize, preds.len());
        prop_assert_eq!(tp_fn as usize, gold.len());
    }

    #[test]
    fn micro_equals_pooled_tally(g in entries(), p in entries()) {
        let (gold, preds) = build(&g, &p);
        let counts = match_predictions(&gold, &preds).unwrap();
        let micro = micro_average(&counts);
        let correct = preds
            .iter()
            .filter(|p| gold.get(&(p.page_id.clone(), p.xpath.clone())) == Some(&p.label))
            .count() as f64;
        let precision = if preds.is_empty() { 0.0 } else { correct / preds.len() as f64 };
        let recall = if gold.is_empty() { 0.0 } else { correct / gold.len() as f64 };
        prop_assert!((micro.precision - precision).abs() < 1e-12);
        prop_assert!((micro.recall - recall).abs() < 1e-12);
    }

    #[test]
    fn macro_is_column_mean(vals in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 17)) {
        let rows: Vec<MetricRow> = vals
            .iter()
            .enumerate()
            .map(|(i, &(p, r))| MetricRow { name: label(i).to_string(), precision: p, recall: r, f1: f1_score(p, r) })
            .collect();
        let m = macro_average(&rows).unwrap();
        let mut sp = 0.0;
        let mut sr = 0.0;
        let mut sf = 0.0;
        for r in &rows {
            sp += r.precision;
            sr += r.recall;
            sf += r.f1;
        }
        prop_assert!((m.precision - sp / 17.0).abs() < 1e-12);
        prop_assert!((m.recall - sr / 17.0).abs() < 1e-12);
        prop_assert!((m.f1 - sf / 17.0).abs() < 1e-12);
    }

    #[test]
    fn f1_lies_between_precision_and_recall(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
        let r = prf_from_counts(&LabelCounts::new(AttributeLabel::Headline, tp, fp, fn_));
        for v in [r.precision, r.recall, r.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if r.precision > 0.0 && r.recall > 0.0 {
            prop_assert!(r.f1 <= r.precision.max(r.recall) + 1e-12);
            prop_assert!(r.f1 >= r.precision.min(r.recall) - 1e-12);
            prop_assert!((r.f1 - 2.0 * r.precision * r.recall / (r.precision + r.recall)).abs() < 1e-12);
        }
    }

    #[test]
    fn tsv_round_trips(counts in prop::collection::vec((0u64..30, 0u64..30, 0u64..30), 17)) {
        let counts: Vec<LabelCounts> = counts
            .iter()
            .enumerate()
            .map(|(i, &(a, b, c))| LabelCounts::new(label(i), a, b, c))
            .collect();
        let report = report_from_counts("m", &counts).unwrap();
        let tsv = render_report(&report, ReportFormat::Tsv);
        let back = parse_report_tsv(&tsv).unwrap();
        prop_assert_eq!(back.rows.len(), 17);
        for (a, b) in report.all_rows().zip(back.all_rows()) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert!((a.precision - b.precision).abs() <= 5e-4 + 1e-12);
            prop_assert!((a.recall - b.recall).abs() <= 5e-4 + 1e-12);
            prop_assert!((a.f1 - b.f1).abs() <= 5e-4 + 1e-12);
        }
        prop_assert_eq!(render_report(&back, ReportFormat::Tsv), tsv);
    }
}

#[test]
fn frequent_strong_label_lifts_micro_above_macro() {
    let mut counts: Vec<LabelCounts> = AttributeLabel::attributes()
        .iter()
        .map(|&l| LabelCounts::new(l, 0, 2, 2))
        .collect();
    counts[AttributeLabel::ProductReview.index()] = LabelCounts::new(AttributeLabel::ProductReview, 500, 10, 10);
    counts[AttributeLabel::ProductName.index()] = LabelCounts::new(AttributeLabel::ProductName, 200, 20, 5);
    let report = report_from_counts("fixture", &counts).unwrap();
    assert!(report.micro_avg.f1 > report.macro_avg.f1);
}

#[test]
fn headline_row_renders_three_decimals() {
    let row = MetricRow {
        name: "headline".into(),
        precision: 0.982,
        recall: 0.984,
        f1: f1_score(0.982, 0.984),
    };
    let mut report = evaluate("m", &GoldMap::new(), &[]).unwrap();
    report.rows[AttributeLabel::Headline.index()] = row;
    let table = render_report(&report, ReportFormat::Table);
    let line = table.lines().find(|l| l.starts_with("headline")).unwrap();
    assert_eq!(line.split_whitespace().collect::<Vec<_>>(), ["headline", "0.982", "0.984", "0.983"]);
    let names: Vec<&str> = table.lines().skip(2).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names.len(), 19);
    assert_eq!(names[17], "Macro-Average");
    assert_eq!(names[18], "Micro-Average");
    for (n, l) in names.iter().zip(AttributeLabel::attributes()) {
        assert_eq!(*n, l.as_str());
    }
}
