//! HTML element trees, XPaths, and node-sequence serialization.
//!
//! A [`DomTree`] stores elements in preorder; `node_id` is the index into
//! that order, so ancestry and document-order comparisons reduce to integer
//! comparisons.

mod parser;
mod sequence;
mod xpath;

pub use parser::{is_tag_char, parse_html};
pub use sequence::{
    chunk_sequence, enumerate_nodes, node_token_text, token_count, NodeSequence, SequenceChunk,
    SequenceItem, SerializationPolicy,
};
pub use xpath::{parse_xpath, XPath, XPathUnit};

use crate::error::{Error, Result};

/// One element of a parsed page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomNode {
    pub node_id: usize,
    pub tag: String,
    /// 1-based position among element siblings sharing `tag`.
    pub subscript: u32,
    pub parent_id: Option<usize>,
    pub children: Vec<usize>,
    /// Direct text children, whitespace-normalized.
    pub own_text: String,
}

impl DomNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomTree {
    page_id: String,
    nodes: Vec<DomNode>,
}

impl DomTree {
    pub(crate) fn from_nodes(page_id: String, nodes: Vec<DomNode>) -> Self {
        debug_assert!(!nodes.is_empty());
        DomTree { page_id, nodes }
    }

    pub fn page_id(&self) -> &str {
        &self.page_id
    }

    pub fn root_id(&self) -> usize {
        0
    }

    pub fn root(&self) -> &DomNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[DomNode] {
        &self.nodes
    }

    pub fn node(&self, node_id: usize) -> Result<&DomNode> {
        self.nodes.get(node_id).ok_or(Error::UnknownNode(node_id))
    }

    /// Root-to-node path of `(tag, subscript)` units.
    pub fn compute_xpath(&self, node_id: usize) -> Result<XPath> {
        let mut node = self.node(node_id)?;
        let mut units = vec![XPathUnit::new_unchecked(&node.tag, node.subscript)];
        while let Some(p) = node.parent_id {
            node = &self.nodes[p];
            units.push(XPathUnit::new_unchecked(&node.tag, node.subscript));
        }
        units.reverse();
        Ok(XPath::from_units(units))
    }

    /// Finds the node addressed by `xpath`, if any.
    pub fn resolve(&self, xpath: &XPath) -> Option<usize> {
        let (first, rest) = xpath.units().split_first()?;
        let root = self.root();
        if first.tag != root.tag || first.subscript != root.subscript {
            return None;
        }
        let mut cur = root;
        for unit in rest {
            let next = cur.children.iter().map(|&c| &self.nodes[c]).find(|c| {
                c.tag == unit.tag && c.subscript == unit.subscript
            })?;
            cur = next;
        }
        Some(cur.node_id)
    }

    /// True when `ancestor` is a proper ancestor of `node`.
    pub fn is_proper_ancestor(&self, ancestor: usize, node: usize) -> bool {
        if ancestor >= node {
            return false;
        }
        let mut cur = self.nodes.get(node).and_then(|n| n.parent_id);
        while let Some(p) = cur {
            if p == ancestor {
                return true;
            }
            if p < ancestor {
                return false;
            }
            cur = self.nodes[p].parent_id;
        }
        false
    }

    /// Leaf elements in the subtree rooted at `node_id` (including itself).
    pub fn leaf_descendants(&self, node_id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node_id];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.is_leaf() {
                out.push(n);
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    /// Serializes back to HTML. Own text is written before the children, so
    /// reparsing yields an identical tree.
    pub fn to_html(&self) -> String {
        let mut out = String::new();
        self.write_node(0, &mut out);
        out
    }

    fn write_node(&self, id: usize, out: &mut String) {
        let node = &self.nodes[id];
        out.push('<');
        out.push_str(&node.tag);
        out.push('>');
        if parser::is_void(&node.tag) {
            return;
        }
        escape_text(&node.own_text, out);
        for &c in &node.children {
            self.write_node(c, out);
        }
        out.push_str("</");
        out.push_str(&node.tag);
        out.push('>');
    }
}

fn escape_text(text: &str, out: &mut String) {
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_inverts_compute_xpath() {
        let t = parse_html(
            "<html><body><div>a</div><div><a><span>Buy</span></a></div></body></html>",
            "p",
        )
        .unwrap();
        for n in t.nodes() {
            let x = t.compute_xpath(n.node_id).unwrap();
            assert_eq!(t.resolve(&x), Some(n.node_id));
        }
        assert_eq!(t.resolve(&parse_xpath("/html/body/div[3]").unwrap()), None);
        assert_eq!(t.resolve(&parse_xpath("/body").unwrap()), None);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let t = parse_html("<html></html>", "p").unwrap();
        assert!(matches!(t.compute_xpath(5), Err(Error::UnknownNode(5))));
    }

    #[test]
    fn ancestry() {
        let t = parse_html("<div><a><span>x</span></a><p>y</p></div>", "p").unwrap();
        // html=0 div=1 a=2 span=3 p=4
        assert!(t.is_proper_ancestor(1, 3));
        assert!(t.is_proper_ancestor(0, 4));
        assert!(!t.is_proper_ancestor(2, 4));
        assert!(!t.is_proper_ancestor(3, 3));
        assert_eq!(t.leaf_descendants(2), vec![3]);
        assert_eq!(t.leaf_descendants(1), vec![3, 4]);
    }
}
