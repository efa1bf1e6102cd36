//! Corrections applied to raw tagger output: link XPath normalization,
//! nested-extraction elimination, and grouping predictions by product.

use std::collections::{BTreeSet, HashMap};

use crate::dom::{DomTree, XPath};
use crate::labels::AttributeLabel;
use crate::tagger::Prediction;

/// Group id given to predictions that precede every anchor.
pub const UNGROUPED: i64 = -1;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductGroup {
    pub group_id: i64,
    pub members: Vec<Prediction>,
    /// Container or name node that opened the group; `None` for the
    /// ungrouped remainder.
    pub anchor: Option<XPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostConfig {
    pub enable_link_norm: bool,
    pub enable_nested_elim: bool,
    pub enable_grouping: bool,
    pub nested_elim_labels: BTreeSet<AttributeLabel>,
}

impl Default for PostConfig {
    fn default() -> Self {
        PostConfig {
            enable_link_norm: true,
            enable_nested_elim: true,
            enable_grouping: true,
            nested_elim_labels: [AttributeLabel::ProductReview].into_iter().collect(),
        }
    }
}

impl PostConfig {
    pub fn disabled() -> Self {
        PostConfig {
            enable_link_norm: false,
            enable_nested_elim: false,
            enable_grouping: false,
            ..PostConfig::default()
        }
    }
}

fn is_span_link(p: &Prediction) -> bool {
    p.label == AttributeLabel::ProductLink && p.xpath.ends_with_tags(&["a", "span"])
}

/// Rewrites `product_link` predictions ending in `a/span` to the `a`.
///
/// When a rewritten path coincides with another `product_link` prediction
/// only the higher-scoring one survives, the earlier one on ties. Output
/// order follows the first occurrence of each surviving path.
pub fn normalize_link_xpaths(preds: &[Prediction], _tree: &DomTree) -> Vec<Prediction> {
    let mut out: Vec<Prediction> = Vec::with_capacity(preds.len());
    let mut link_slot: HashMap<XPath, usize> = HashMap::new();
    for p in preds {
        if p.label != AttributeLabel::ProductLink {
            out.push(p.clone());
            continue;
        }
        let mut q = p.clone();
        if is_span_link(p) {
            q.xpath = p.xpath.parent().expect("a/span has a parent");
        }
        match link_slot.get(&q.xpath) {
            Some(&i) => {
                if q.score > out[i].score {
                    out[i] = q;
                }
            }
            None => {
                link_slot.insert(q.xpath.clone(), out.len());
                out.push(q);
            }
        }
    }
    out
}

/// Drops predictions whose node has a proper ancestor predicted with the
/// same label, for the configured labels. Predictions that do not resolve
/// in `tree` are kept.
pub fn eliminate_nested(
    preds: &[Prediction],
    tree: &DomTree,
    labels: &BTreeSet<AttributeLabel>,
) -> Vec<Prediction> {
    let mut marked: HashMap<AttributeLabel, Vec<bool>> = HashMap::new();
    for p in preds.iter().filter(|p| labels.contains(&p.label)) {
        if let Some(id) = tree.resolve(&p.xpath) {
            marked.entry(p.label).or_insert_with(|| vec![false; tree.len()])[id] = true;
        }
    }
    preds
        .iter()
        .filter(|p| {
            let Some(mask) = marked.get(&p.label) else {
                return true;
            };
            let Some(id) = tree.resolve(&p.xpath) else {
                return true;
            };
            let mut cur = tree.nodes()[id].parent_id;
            while let Some(a) = cur {
                if mask[a] {
                    return false;
                }
                cur = tree.nodes()[a].parent_id;
            }
            true
        })
        .cloned()
        .collect()
}

/// Partitions predictions into per-product groups.
///
/// A prediction inside (or on) a predicted `product_container` joins the
/// deepest such container. The rest are split in document order at each
/// `product_name` prediction; anything before the first name, or not
/// resolvable in `tree`, goes to group [`UNGROUPED`]. Groups are numbered
/// from 0 in document order of their anchors, with the ungrouped group last.
pub fn group_by_product(preds: &[Prediction], tree: &DomTree) -> Vec<ProductGroup> {
    let ids: Vec<Option<usize>> = preds.iter().map(|p| tree.resolve(&p.xpath)).collect();
    let mut is_container = vec![false; tree.len()];
    for (p, id) in preds.iter().zip(&ids) {
        if let (AttributeLabel::ProductContainer, Some(id)) = (p.label, id) {
            is_container[*id] = true;
        }
    }

    // anchor node id per prediction: container first, name segments second
    let mut anchor_of: Vec<Option<usize>> = vec![None; preds.len()];
    let mut loose: Vec<usize> = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let Some(mut cur) = *id else { continue };
        loop {
            if is_container[cur] {
                anchor_of[i] = Some(cur);
                break;
            }
            match tree.nodes()[cur].parent_id {
                Some(p) => cur = p,
                None => break,
            }
        }
        if anchor_of[i].is_none() {
            loose.push(i);
        }
    }
    loose.sort_by_key(|&i| (ids[i], i));
    let mut current: Option<usize> = None;
    for &i in &loose {
        if preds[i].label == AttributeLabel::ProductName {
            current = ids[i];
        }
        anchor_of[i] = current;
    }

    let anchors: BTreeSet<usize> = anchor_of.iter().flatten().copied().collect();
    let index: HashMap<usize, usize> = anchors.iter().enumerate().map(|(g, &a)| (a, g)).collect();
    let mut groups: Vec<ProductGroup> = anchors
        .iter()
        .enumerate()
        .map(|(g, &a)| ProductGroup {
            group_id: g as i64,
            members: Vec::new(),
            anchor: Some(tree.compute_xpath(a).expect("anchor from this tree")),
        })
        .collect();
    let mut ungrouped = ProductGroup {
        group_id: UNGROUPED,
        members: Vec::new(),
        anchor: None,
    };
    for (p, a) in preds.iter().zip(&anchor_of) {
        match a {
            Some(a) => groups[index[a]].members.push(p.clone()),
            None => ungrouped.members.push(p.clone()),
        }
    }
    if !ungrouped.members.is_empty() {
        groups.push(ungrouped);
    }
    groups
}

/// Runs the enabled stages in the order normalize, eliminate, group.
pub fn run_pipeline(
    preds: &[Prediction],
    tree: &DomTree,
    config: &PostConfig,
) -> (Vec<Prediction>, Vec<ProductGroup>) {
    let mut out = preds.to_vec();
    if config.enable_link_norm {
        out = normalize_link_xpaths(&out, tree);
    }
    if config.enable_nested_elim {
        out = eliminate_nested(&out, tree, &config.nested_elim_labels);
    }
    let groups = if config.enable_grouping {
        group_by_product(&out, tree)
    } else {
        Vec::new()
    };
    (out, groups)
}
