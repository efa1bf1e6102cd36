use crate::dom::{chunk_sequence, enumerate_nodes, DomTree, SerializationPolicy};
use crate::error::{Error, Result};
use crate::labels::AttributeLabel;

use super::model::TaggerModel;
use super::Prediction;

/// Tags every serialized node of `tree`.
///
/// Nodes covered by several overlapping chunks keep the distribution whose
/// maximum probability is highest. A prediction is emitted when the argmax
/// is not NONE and its probability is at least `threshold`.
pub fn predict_page(
    model: &TaggerModel,
    tree: &DomTree,
    policy: SerializationPolicy,
    threshold: f64,
) -> Result<Vec<Prediction>> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!("threshold {threshold} outside [0, 1)")));
    }
    let seq = enumerate_nodes(tree, policy);
    let chunks = chunk_sequence(&seq, model.config.max_tokens, model.config.stride)?;
    let mut best: Vec<Option<(f64, usize)>> = vec![None; seq.items.len()];
    for chunk in &chunks {
        let probs = model.forward(&chunk.items)?;
        for (j, row) in probs.rows().into_iter().enumerate() {
            let (arg, &p) = row
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |acc, (i, p)| if p > acc.1 { (i, p) } else { acc });
            let slot = &mut best[chunk.start + j];
            if slot.is_none_or(|(q, _)| p > q) {
                *slot = Some((p, arg));
            }
        }
    }
    Ok(seq
        .items
        .iter()
        .zip(best)
        .filter_map(|(item, b)| {
            let (p, arg) = b?;
            let label = AttributeLabel::from_index(arg)?;
            (!label.is_none() && p >= threshold).then(|| Prediction {
                page_id: tree.page_id().to_string(),
                xpath: item.xpath.clone(),
                label,
                score: p.clamp(0.0, 1.0),
            })
        })
        .collect())
}
