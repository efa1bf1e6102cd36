use std::fmt;
use std::str::FromStr;

use super::{DomTree, XPath};
use crate::error::{Error, Result};

/// Which element nodes become items of the serialized sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SerializationPolicy {
    /// Only elements without element children.
    LeafOnly,
    /// Every element, internal nodes represented by a marker token.
    RetainInternal,
}

impl SerializationPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            SerializationPolicy::LeafOnly => "leaf",
            SerializationPolicy::RetainInternal => "full",
        }
    }
}

impl fmt::Display for SerializationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SerializationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leaf" | "leaf-only" => Ok(SerializationPolicy::LeafOnly),
            "full" | "retain-internal" => Ok(SerializationPolicy::RetainInternal),
            other => Err(Error::InvalidConfig(format!(
                "unknown serialization policy {other:?} (expected leaf|full)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceItem {
    pub node_id: usize,
    pub xpath: XPath,
    pub token_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSequence {
    pub page_id: String,
    pub policy: SerializationPolicy,
    pub items: Vec<SequenceItem>,
}

/// A contiguous window of a [`NodeSequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceChunk {
    pub page_id: String,
    pub window: usize,
    /// Index of the first item within the parent sequence.
    pub start: usize,
    pub items: Vec<SequenceItem>,
}

impl SequenceChunk {
    pub fn token_count(&self) -> usize {
        self.items.iter().map(|i| token_count(&i.token_text)).sum()
    }
}

/// Text fed to the tagger for a node: own text for leaves, `⟨tag⟩` for
/// internal nodes when they are retained.
pub fn node_token_text(tree: &DomTree, node_id: usize, policy: SerializationPolicy) -> Result<String> {
    let node = tree.node(node_id)?;
    if node.is_leaf() {
        return Ok(node.own_text.clone());
    }
    match policy {
        SerializationPolicy::RetainInternal => Ok(format!("\u{27E8}{}\u{27E9}", node.tag)),
        // not part of a leaf-only sequence; fall back to the node's own text
        SerializationPolicy::LeafOnly => Ok(node.own_text.clone()),
    }
}

pub fn enumerate_nodes(tree: &DomTree, policy: SerializationPolicy) -> NodeSequence {
    let items = tree
        .nodes()
        .iter()
        .filter(|n| policy == SerializationPolicy::RetainInternal || n.is_leaf())
        .map(|n| SequenceItem {
            node_id: n.node_id,
            xpath: tree.compute_xpath(n.node_id).expect("node from this tree"),
            token_text: node_token_text(tree, n.node_id, policy).expect("node from this tree"),
        })
        .collect();
    NodeSequence {
        page_id: tree.page_id().to_string(),
        policy,
        items,
    }
}

/// Whitespace word count, never less than one.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count().max(1)
}

/// Splits a sequence into overlapping windows of at most `max_tokens`
/// tokens.
///
/// A sequence that fits is returned as a single chunk. Otherwise windows
/// start every `stride` tokens (aligned to item boundaries) until the start
/// passes the final item. A window is filled greedily; an item longer than
/// `max_tokens` sits alone in its window.
pub fn chunk_sequence(seq: &NodeSequence, max_tokens: usize, stride: usize) -> Result<Vec<SequenceChunk>> {
    if max_tokens == 0 || stride == 0 || stride > max_tokens {
        return Err(Error::InvalidChunkParams { max_tokens, stride });
    }
    let lens: Vec<usize> = seq.items.iter().map(|i| token_count(&i.token_text)).collect();
    let total: usize = lens.iter().sum();
    let make = |window: usize, start: usize, end: usize| SequenceChunk {
        page_id: seq.page_id.clone(),
        window,
        start,
        items: seq.items[start..end].to_vec(),
    };
    if total <= max_tokens {
        return Ok(vec![make(0, 0, seq.items.len())]);
    }

    let mut offsets = Vec::with_capacity(lens.len());
    let mut acc = 0;
    for &l in &lens {
        offsets.push(acc);
        acc += l;
    }

    let mut chunks = Vec::new();
    let mut start = 0;
    while start < seq.items.len() {
        let mut end = start + 1;
        let mut used = lens[start];
        while end < seq.items.len() && used + lens[end] <= max_tokens {
            used += lens[end];
            end += 1;
        }
        chunks.push(make(chunks.len(), start, end));
        let target = offsets[start] + stride;
        let next = (start + 1..seq.items.len())
            .find(|&i| offsets[i] >= target)
            .unwrap_or(seq.items.len());
        // never skip past the end of the window just emitted
        start = next.min(end).max(start + 1);
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;

    fn tags(seq: &NodeSequence, tree: &DomTree) -> Vec<String> {
        seq.items
            .iter()
            .map(|i| tree.node(i.node_id).unwrap().tag.clone())
            .collect()
    }

    #[test]
    fn leaf_only_versus_retain_internal() {
        let t = parse_html("<html><body><a><span>x</span></a></body></html>", "p").unwrap();
        let leaf = enumerate_nodes(&t, SerializationPolicy::LeafOnly);
        let full = enumerate_nodes(&t, SerializationPolicy::RetainInternal);
        assert_eq!(tags(&leaf, &t), ["span"]);
        assert_eq!(tags(&full, &t), ["html", "body", "a", "span"]);
        assert_eq!(full.items[2].xpath.to_string(), "/html[1]/body[1]/a[1]");
    }

    #[test]
    fn single_node_tree() {
        let t = parse_html("<html>hello</html>", "p").unwrap();
        for policy in [SerializationPolicy::LeafOnly, SerializationPolicy::RetainInternal] {
            let s = enumerate_nodes(&t, policy);
            assert_eq!(s.items.len(), 1);
            assert_eq!(s.items[0].token_text, "hello");
        }
    }

    #[test]
    fn token_text_rules() {
        let t = parse_html("<div><a><span>Buy</span> now</a></div>", "p").unwrap();
        // html=0 div=1 a=2 span=3
        let full = SerializationPolicy::RetainInternal;
        assert_eq!(node_token_text(&t, 3, full).unwrap(), "Buy");
        assert_eq!(node_token_text(&t, 1, full).unwrap(), "\u{27E8}div\u{27E9}");
        assert_eq!(node_token_text(&t, 2, full).unwrap(), "⟨a⟩");
        assert!(matches!(node_token_text(&t, 9, full), Err(Error::UnknownNode(9))));
    }

    fn unit_seq(n: usize) -> NodeSequence {
        NodeSequence {
            page_id: "p".into(),
            policy: SerializationPolicy::LeafOnly,
            items: (0..n)
                .map(|i| SequenceItem {
                    node_id: i,
                    xpath: XPath::default(),
                    token_text: "w".into(),
                })
                .collect(),
        }
    }

    #[test]
    fn sliding_window_starts() {
        let chunks = chunk_sequence(&unit_seq(10), 4, 2).unwrap();
        let starts: Vec<_> = chunks.iter().map(|c| c.start).collect();
        assert_eq!(starts, [0, 2, 4, 6, 8]);
        assert!(chunks.iter().all(|c| c.token_count() <= 4));
        assert_eq!(chunks[4].items.len(), 2);
        assert_eq!(chunks.iter().map(|c| c.window).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
    }

    #[test]
    fn short_sequence_is_one_chunk() {
        let chunks = chunk_sequence(&unit_seq(3), 4, 2).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].items.len(), 3);
        let empty = chunk_sequence(&unit_seq(0), 4, 2).unwrap();
        assert_eq!(empty.len(), 1);
        assert!(empty[0].items.is_empty());
    }

    #[test]
    fn invalid_params() {
        for (m, s) in [(0, 0), (4, 0), (4, 5), (0, 1)] {
            assert!(matches!(
                chunk_sequence(&unit_seq(3), m, s),
                Err(Error::InvalidChunkParams { .. })
            ));
        }
    }

    #[test]
    fn oversized_item_gets_its_own_chunk() {
        let mut seq = unit_seq(6);
        seq.items[2].token_text = "a b c d e f g".into();
        let chunks = chunk_sequence(&seq, 4, 2).unwrap();
        let alone: Vec<_> = chunks.iter().filter(|c| c.items.iter().any(|i| i.node_id == 2)).collect();
        assert!(!alone.is_empty());
        assert!(alone.iter().all(|c| c.items.len() == 1));
        for id in 0..6 {
            assert!(chunks.iter().any(|c| c.items.iter().any(|i| i.node_id == id)));
        }
    }
}
