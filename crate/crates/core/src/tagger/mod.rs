//! Node tagging: a trainable attention tagger and a deterministic rule
//! tagger, both emitting one [`Prediction`] per labeled node.

mod checkpoint;
mod model;
mod predict;
mod rules;
mod train;

pub use model::{
    init_model, softmax_rows, ForwardCache, LayerParams, TaggerConfig, TaggerModel, TaggerParams,
    WordVocab,
};
pub use predict::predict_page;
pub use rules::{rule_tag, Rule, RuleSet, TextPredicate};
pub use train::{align_labels, build_batches, build_vocab, train_corpus, GoldMap, TrainBatch, TrainingPage};

use crate::dom::XPath;
use crate::labels::AttributeLabel;

/// One extracted node.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub page_id: String,
    pub xpath: XPath,
    /// Never [`AttributeLabel::None`].
    pub label: AttributeLabel,
    /// Model probability of `label`, in `[0, 1]`.
    pub score: f64,
}
