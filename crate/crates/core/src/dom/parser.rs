//! Lenient, deterministic HTML tree construction.
//!
//! Recovery rules only ever inspect the current open-element stack, never
//! lookahead, so a tree serialized by [`DomTree::to_html`] reparses to the
//! same tree.
//!
//! - The root is always `html`; explicit `<html>` tags merge into it.
//! - Void elements and `<x/>` never receive children.
//! - An end tag pops up to the nearest matching open element, or is
//!   ignored when nothing matches.
//! - A small set of start tags implicitly closes the current element
//!   (`p` before block content, `li` before `li`, table cells, ...).
//! - `script`, `style`, comments, doctypes and processing instructions are
//!   dropped along with their content.

use super::{DomNode, DomTree};
use crate::error::{Error, Result};

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

const RAW_TEXT: &[&str] = &["script", "style"];

/// Start tags that close an open `p`.
const CLOSES_P: &[&str] = &[
    "address", "article", "aside", "blockquote", "details", "div", "dl", "fieldset", "figure",
    "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "menu", "nav",
    "ol", "p", "pre", "section", "table", "ul",
];

pub(crate) fn is_void(tag: &str) -> bool {
    VOID.contains(&tag)
}

/// Characters permitted in element names (after lowercasing).
pub fn is_tag_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '-' | '_' | ':' | '.')
}

fn closes_top(new_tag: &str, top: &str) -> bool {
    match top {
        "p" => CLOSES_P.contains(&new_tag),
        "li" => new_tag == "li",
        "dt" | "dd" => matches!(new_tag, "dt" | "dd"),
        "option" => matches!(new_tag, "option" | "optgroup"),
        "td" | "th" => matches!(new_tag, "td" | "th" | "tr"),
        "tr" => new_tag == "tr",
        _ => false,
    }
}

struct Building {
    tag: String,
    parent: Option<usize>,
    children: Vec<usize>,
    text: Vec<String>,
}

struct Builder {
    nodes: Vec<Building>,
    stack: Vec<usize>,
    saw_element: bool,
}

impl Builder {
    fn new() -> Self {
        Builder {
            nodes: vec![Building {
                tag: "html".to_string(),
                parent: None,
                children: Vec::new(),
                text: Vec::new(),
            }],
            stack: vec![0],
            saw_element: false,
        }
    }

    fn top(&self) -> usize {
        *self.stack.last().expect("root never popped")
    }

    fn start(&mut self, tag: String, self_closing: bool) {
        self.saw_element = true;
        if tag == "html" {
            return;
        }
        while self.stack.len() > 1 && closes_top(&tag, &self.nodes[self.top()].tag) {
            self.stack.pop();
        }
        let parent = self.top();
        let id = self.nodes.len();
        let void = is_void(&tag);
        self.nodes.push(Building {
            tag,
            parent: Some(parent),
            children: Vec::new(),
            text: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        if !void && !self_closing {
            self.stack.push(id);
        }
    }

    fn end(&mut self, tag: &str) {
        if let Some(pos) = self.stack[1..]
            .iter()
            .rposition(|&id| self.nodes[id].tag == tag)
        {
            self.stack.truncate(pos + 1);
        }
    }

    fn text(&mut self, text: String) {
        let top = self.top();
        self.nodes[top].text.push(text);
    }

    fn finish(self, page_id: &str) -> Result<DomTree> {
        if !self.saw_element {
            return Err(Error::EmptyDocument);
        }
        let mut nodes: Vec<DomNode> = self
            .nodes
            .into_iter()
            .enumerate()
            .map(|(id, b)| DomNode {
                node_id: id,
                tag: b.tag,
                subscript: 1,
                parent_id: b.parent,
                children: b.children,
                own_text: normalize_ws(&b.text.join(" ")),
            })
            .collect();
        for id in 0..nodes.len() {
            let children = nodes[id].children.clone();
            let mut seen: Vec<(String, u32)> = Vec::new();
            for c in children {
                let tag = nodes[c].tag.clone();
                let k = match seen.iter_mut().find(|(t, _)| *t == tag) {
                    Some((_, k)) => {
                        *k += 1;
                        *k
                    }
                    None => {
                        seen.push((tag, 1));
                        1
                    }
                };
                nodes[c].subscript = k;
            }
        }
        Ok(DomTree::from_nodes(page_id.to_string(), nodes))
    }
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses possibly malformed HTML into an element tree.
///
/// Fails with [`Error::EmptyDocument`] only when the input contains no start
/// tag at all.
pub fn parse_html(html: &str, page_id: &str) -> Result<DomTree> {
    let mut b = Builder::new();
    let bytes = html.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let Some(rel) = html[i..].find('<') else {
            b.text(decode_entities(&html[i..]));
            break;
        };
        if rel > 0 {
            b.text(decode_entities(&html[i..i + rel]));
        }
        i += rel;
        let rest = &html[i..];
        if let Some(body) = rest.strip_prefix("<!--") {
            i = match body.find("-->") {
                Some(e) => i + 4 + e + 3,
                None => bytes.len(),
            };
        } else if rest.starts_with("<!") || rest.starts_with("<?") {
            i = skip_past_gt(html, i);
        } else if let Some(close) = rest.strip_prefix("</") {
            let (name, _) = read_name(close);
            i = skip_past_gt(html, i);
            if !name.is_empty() && name != "html" {
                b.end(&name);
            }
        } else if rest[1..].starts_with(|c: char| c.is_ascii_alphabetic()) {
            let (name, name_len) = read_name(&rest[1..]);
            match scan_tag_end(html, i + 1 + name_len) {
                Some((end, self_closing)) => {
                    i = end;
                    if RAW_TEXT.contains(&name.as_str()) {
                        if !self_closing {
                            i = skip_raw_text(html, i, &name);
                        }
                    } else {
                        b.start(name, self_closing);
                    }
                }
                // unterminated tag at EOF: drop it
                None => i = bytes.len(),
            }
        } else {
            b.text("<".to_string());
            i += 1;
        }
    }
    b.finish(page_id)
}

/// Reads an element name, lowercased, stopping at the first character that
/// cannot belong to one. Returns the name and its byte length in the input.
fn read_name(s: &str) -> (String, usize) {
    let mut name = String::new();
    let mut len = 0;
    for c in s.chars() {
        let lc = c.to_ascii_lowercase();
        if !is_tag_char(lc) {
            break;
        }
        name.push(lc);
        len += c.len_utf8();
    }
    (name, len)
}

fn skip_past_gt(html: &str, from: usize) -> usize {
    match html[from..].find('>') {
        Some(e) => from + e + 1,
        None => html.len(),
    }
}

/// Scans attributes up to the closing `>`, honoring quoted values. Returns
/// the index just past `>` and whether the tag was written `<x/>`.
fn scan_tag_end(html: &str, from: usize) -> Option<(usize, bool)> {
    let bytes = html.as_bytes();
    let mut i = from;
    let mut quote: Option<u8> = None;
    let mut last_significant = 0u8;
    while i < bytes.len() {
        let c = bytes[i];
        match quote {
            Some(q) => {
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                b'"' | b'\'' => quote = Some(c),
                b'>' => return Some((i + 1, last_significant == b'/')),
                _ => {}
            },
        }
        if !c.is_ascii_whitespace() {
            last_significant = c;
        }
        i += 1;
    }
    None
}

fn skip_raw_text(html: &str, from: usize, name: &str) -> usize {
    let close = format!("</{name}");
    let lower = html[from..].to_ascii_lowercase();
    match lower.find(&close) {
        Some(e) => skip_past_gt(html, from + e),
        None => html.len(),
    }
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let decoded = rest[1..].find(';').filter(|&e| e <= 10).and_then(|e| {
            let body = &rest[1..1 + e];
            decode_entity(body).map(|c| (c, e + 2))
        });
        match decoded {
            Some((c, consumed)) => {
                out.push(c);
                rest = &rest[consumed..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_entity(body: &str) -> Option<char> {
    if let Some(num) = body.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse::<u32>().ok()?,
        };
        return Some(char::from_u32(code).filter(|&c| c != '\0').unwrap_or('\u{FFFD}'));
    }
    Some(match body {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => '\u{A0}',
        "pound" => '£',
        "euro" => '€',
        "mdash" => '—',
        "ndash" => '–',
        "rsquo" => '\u{2019}',
        "lsquo" => '\u{2018}',
        "hellip" => '…',
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(t: &DomTree) -> Vec<&str> {
        t.nodes().iter().map(|n| n.tag.as_str()).collect()
    }

    #[test]
    fn minimal_document() {
        let t = parse_html("<html><body><a>x</a></body></html>", "p0").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(tags(&t), ["html", "body", "a"]);
        assert_eq!(t.node(2).unwrap().own_text, "x");
        assert_eq!(t.page_id(), "p0");
    }

    #[test]
    fn span_is_the_only_leaf_under_link() {
        let t = parse_html(
            "<html><body><div><a><span>Buy</span></a></div></body></html>",
            "p",
        )
        .unwrap();
        let div = t.nodes().iter().find(|n| n.tag == "div").unwrap();
        let leaves = t.leaf_descendants(div.node_id);
        assert_eq!(leaves.len(), 1);
        assert_eq!(t.node(leaves[0]).unwrap().tag, "span");
        assert_eq!(t.node(leaves[0]).unwrap().own_text, "Buy");
    }

    #[test]
    fn script_style_and_comments_are_dropped() {
        let t = parse_html(
            "<div>a<!-- hidden <b>x</b> --><script>var x = '<p>';</script>b<style>p{}</style></div>",
            "p",
        )
        .unwrap();
        assert_eq!(tags(&t), ["html", "div"]);
        assert_eq!(t.node(1).unwrap().own_text, "a b");
    }

    #[test]
    fn empty_documents() {
        assert!(matches!(parse_html("", "p"), Err(Error::EmptyDocument)));
        assert!(matches!(parse_html("just text", "p"), Err(Error::EmptyDocument)));
        assert!(matches!(parse_html("<!-- c -->", "p"), Err(Error::EmptyDocument)));
        let t = parse_html("<html></html>", "p").unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn unclosed_tags_are_recovered() {
        let t = parse_html("<ul><li>one<li>two</ul><p>a<p>b<div>c", "p").unwrap();
        assert_eq!(tags(&t), ["html", "ul", "li", "li", "p", "p", "div"]);
        assert_eq!(t.node(3).unwrap().subscript, 2);
        assert_eq!(t.node(6).unwrap().parent_id, Some(0));
    }

    #[test]
    fn stray_end_tags_are_ignored() {
        let t = parse_html("<div></span><b>x</b></div></div>", "p").unwrap();
        assert_eq!(tags(&t), ["html", "div", "b"]);
    }

    #[test]
    fn void_and_self_closing_take_no_children() {
        let t = parse_html("<div><br>a<img src='x>y'/><span/>b</div>", "p").unwrap();
        assert_eq!(tags(&t), ["html", "div", "br", "img", "span"]);
        assert!(t.nodes()[2..].iter().all(|n| n.is_leaf()));
        assert_eq!(t.node(1).unwrap().own_text, "a b");
    }

    #[test]
    fn attributes_quotes_and_case() {
        let t = parse_html("<DIV class=\"a > b\" id='q'>Hi</Div>", "p").unwrap();
        assert_eq!(tags(&t), ["html", "div"]);
        assert_eq!(t.node(1).unwrap().own_text, "Hi");
    }

    #[test]
    fn entities_decode() {
        let t = parse_html("<p>Fish &amp; Chips &lt;3 &#163;5 &#x41; &bogus; &</p>", "p").unwrap();
        assert_eq!(t.node(1).unwrap().own_text, "Fish & Chips <3 £5 A &bogus; &");
    }

    #[test]
    fn top_level_content_wraps_in_html() {
        let t = parse_html("<div>a</div><div>b</div>", "p").unwrap();
        assert_eq!(t.root().tag, "html");
        assert_eq!(t.root().children, vec![1, 2]);
        assert_eq!(t.node(2).unwrap().subscript, 2);
    }

    #[test]
    fn lone_angle_bracket_is_text() {
        let t = parse_html("<p>a < b</p>", "p").unwrap();
        assert_eq!(t.node(1).unwrap().own_text, "a < b");
    }

    #[test]
    fn unterminated_tag_at_eof() {
        let t = parse_html("<div>a<span class=\"x", "p").unwrap();
        assert_eq!(tags(&t), ["html", "div"]);
    }

    #[test]
    fn serialization_round_trips() {
        let src = "<html><body><p>a &amp; b<div>x<br>y</div><ul><li>1<li>2</ul><table><tr><td>a<td>b<tr><td>c</table></body></html>";
        let t = parse_html(src, "p").unwrap();
        let again = parse_html(&t.to_html(), "p").unwrap();
        assert_eq!(t, again);
    }
}
