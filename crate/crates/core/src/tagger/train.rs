use std::collections::BTreeMap;

use crate::dom::{chunk_sequence, enumerate_nodes, DomTree, SequenceChunk, SequenceItem, SerializationPolicy, XPath};
use crate::error::Result;
use crate::labels::AttributeLabel;

use super::model::{TaggerModel, WordVocab};

/// Gold labels of one page keyed by canonical XPath.
pub type GoldMap = BTreeMap<XPath, AttributeLabel>;

#[derive(Debug, Clone)]
pub struct TrainingPage {
    pub tree: DomTree,
    pub gold: GoldMap,
}

/// One chunk with a class index per item.
#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub chunk: SequenceChunk,
    pub labels: Vec<usize>,
}

/// Training targets for serialized items.
///
/// An item takes its own gold label. Under [`SerializationPolicy::LeafOnly`]
/// an unlabeled leaf also inherits the label of its nearest labeled ancestor
/// when it is that ancestor's only leaf, since the ancestor's text is then
/// exactly this leaf's text (`<a><span>Buy</span></a>` puts the link label
/// on the span). Everything else is NONE.
pub fn align_labels(
    tree: &DomTree,
    items: &[SequenceItem],
    gold: &GoldMap,
    policy: SerializationPolicy,
) -> Vec<AttributeLabel> {
    items
        .iter()
        .map(|it| {
            if let Some(&l) = gold.get(&it.xpath) {
                return l;
            }
            if policy == SerializationPolicy::RetainInternal {
                return AttributeLabel::None;
            }
            let mut cur = tree.nodes()[it.node_id].parent_id;
            while let Some(a) = cur {
                let ax = tree.compute_xpath(a).expect("ancestor exists");
                if let Some(&l) = gold.get(&ax) {
                    return if tree.leaf_descendants(a) == [it.node_id] {
                        l
                    } else {
                        AttributeLabel::None
                    };
                }
                cur = tree.nodes()[a].parent_id;
            }
            AttributeLabel::None
        })
        .collect()
}

pub fn build_batches(
    tree: &DomTree,
    gold: &GoldMap,
    policy: SerializationPolicy,
    max_tokens: usize,
    stride: usize,
) -> Result<Vec<TrainBatch>> {
    let seq = enumerate_nodes(tree, policy);
    Ok(chunk_sequence(&seq, max_tokens, stride)?
        .into_iter()
        .map(|chunk| {
            let labels = align_labels(tree, &chunk.items, gold, policy)
                .into_iter()
                .map(AttributeLabel::index)
                .collect();
            TrainBatch { chunk, labels }
        })
        .collect())
}

/// Vocabulary over the token texts the policy would feed the model.
pub fn build_vocab(pages: &[TrainingPage], policy: SerializationPolicy, min_count: usize) -> WordVocab {
    let seqs: Vec<_> = pages.iter().map(|p| enumerate_nodes(&p.tree, policy)).collect();
    WordVocab::build(
        seqs.iter()
            .flat_map(|s| s.items.iter().map(|i| i.token_text.as_str())),
        min_count,
    )
}

impl TaggerModel {
    pub fn train_batch(&mut self, batch: &TrainBatch, lr: f64) -> Result<f64> {
        self.train_step(&batch.chunk.items, &batch.labels, lr)
    }
}

/// Runs `epochs` passes over `pages` in order, one step per chunk, using the
/// model's own policy and chunking. Returns the mean step loss per epoch.
pub fn train_corpus(
    model: &mut TaggerModel,
    pages: &[TrainingPage],
    epochs: usize,
    lr: f64,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<Vec<f64>> {
    let c = &model.config;
    let mut batches = Vec::new();
    for p in pages {
        batches.extend(build_batches(&p.tree, &p.gold, c.policy, c.max_tokens, c.stride)?);
    }
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let mut sum = 0.0;
        for b in &batches {
            sum += model.train_batch(b, lr)?;
        }
        let mean = if batches.is_empty() { 0.0 } else { sum / batches.len() as f64 };
        on_epoch(epoch + 1, mean);
        losses.push(mean);
    }
    Ok(losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::{parse_html, parse_xpath};

    #[test]
    fn leaf_only_projects_link_label_onto_sole_span() {
        let t = parse_html(
            "<html><body><div><a><span>Buy</span></a></div><p>x<a>y</a><b>z</b></p></body></html>",
            "p",
        )
        .unwrap();
        let mut gold = GoldMap::new();
        gold.insert(parse_xpath("/html/body/div/a").unwrap(), AttributeLabel::ProductLink);
        gold.insert(parse_xpath("/html/body/p").unwrap(), AttributeLabel::ProductReview);
        let leaf = enumerate_nodes(&t, SerializationPolicy::LeafOnly);
        let labels = align_labels(&t, &leaf.items, &gold, SerializationPolicy::LeafOnly);
        // span, p/a, p/b: the p has two leaves so nothing is projected
        assert_eq!(
            labels,
            [AttributeLabel::ProductLink, AttributeLabel::None, AttributeLabel::None]
        );
        let full = enumerate_nodes(&t, SerializationPolicy::RetainInternal);
        let labels = align_labels(&t, &full.items, &gold, SerializationPolicy::RetainInternal);
        let labeled: Vec<_> = full
            .items
            .iter()
            .zip(&labels)
            .filter(|(_, l)| !l.is_none())
            .map(|(i, l)| (i.xpath.to_string(), *l))
            .collect();
        assert_eq!(
            labeled,
            [
                ("/html[1]/body[1]/div[1]/a[1]".to_string(), AttributeLabel::ProductLink),
                ("/html[1]/body[1]/p[1]".to_string(), AttributeLabel::ProductReview),
            ]
        );
    }
}
