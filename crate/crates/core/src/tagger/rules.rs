use crate::dom::{enumerate_nodes, DomTree, SerializationPolicy};
use crate::labels::AttributeLabel;

use super::Prediction;

/// Condition on a node's own text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextPredicate {
    Any,
    NonEmpty,
    Equals(String),
    OneOf(Vec<String>),
    Contains(String),
}

impl TextPredicate {
    pub fn matches(&self, text: &str) -> bool {
        match self {
            TextPredicate::Any => true,
            TextPredicate::NonEmpty => !text.is_empty(),
            TextPredicate::Equals(s) => text == s,
            TextPredicate::OneOf(set) => set.iter().any(|s| s == text),
            TextPredicate::Contains(s) => text.contains(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    /// Trailing tags of the node's XPath, root-most first.
    pub suffix: Vec<String>,
    pub text: TextPredicate,
    pub label: AttributeLabel,
}

impl Rule {
    pub fn new(suffix: &[&str], text: TextPredicate, label: AttributeLabel) -> Self {
        Rule {
            suffix: suffix.iter().map(|s| s.to_string()).collect(),
            text,
            label,
        }
    }
}

/// Ordered rules; the first match wins and no match means NONE.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Self {
        RuleSet { rules }
    }

    pub fn push(&mut self, rule: Rule) {
        self.rules.push(rule);
    }
}

/// Applies `rules` to the nodes `policy` serializes. Scores are 1.0.
pub fn rule_tag(rules: &RuleSet, tree: &DomTree, policy: SerializationPolicy) -> Vec<Prediction> {
    let seq = enumerate_nodes(tree, policy);
    seq.items
        .into_iter()
        .filter_map(|item| {
            let text = &tree.nodes()[item.node_id].own_text;
            let rule = rules
                .rules
                .iter()
                .find(|r| item.xpath.ends_with_tags(&r.suffix) && r.text.matches(text))?;
            (!rule.label.is_none()).then(|| Prediction {
                page_id: tree.page_id().to_string(),
                xpath: item.xpath,
                label: rule.label,
                score: 1.0,
            })
        })
        .collect()
}
