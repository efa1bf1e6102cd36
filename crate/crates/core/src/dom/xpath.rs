use std::fmt;
use std::str::FromStr;

use super::parser::is_tag_char;
use crate::error::{Error, Result};

/// One step of an XPath: an element name and its 1-based same-tag sibling
/// position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XPathUnit {
    pub tag: String,
    pub subscript: u32,
}

impl XPathUnit {
    pub fn new(tag: &str, subscript: u32) -> Result<Self> {
        let tag = tag.to_ascii_lowercase();
        if tag.is_empty() || !tag.chars().all(is_tag_char) {
            return Err(malformed(&tag, "invalid tag name"));
        }
        if subscript < 1 {
            return Err(malformed(&tag, "subscript must be >= 1"));
        }
        Ok(XPathUnit { tag, subscript })
    }

    pub(crate) fn new_unchecked(tag: &str, subscript: u32) -> Self {
        XPathUnit {
            tag: tag.to_string(),
            subscript,
        }
    }
}

impl fmt::Display for XPathUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.tag, self.subscript)
    }
}

/// Root-first sequence of units. `Display` writes the canonical form
/// `/tag[k]/tag[k]...` with every subscript explicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct XPath {
    units: Vec<XPathUnit>,
}

impl XPath {
    pub fn from_units(units: Vec<XPathUnit>) -> Self {
        XPath { units }
    }

    pub fn units(&self) -> &[XPathUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn last(&self) -> Option<&XPathUnit> {
        self.units.last()
    }

    /// The path with its final unit removed.
    pub fn parent(&self) -> Option<XPath> {
        if self.units.is_empty() {
            return None;
        }
        Some(XPath {
            units: self.units[..self.units.len() - 1].to_vec(),
        })
    }

    /// True when the trailing tags equal `tags` (subscripts ignored).
    pub fn ends_with_tags<S: AsRef<str>>(&self, tags: &[S]) -> bool {
        tags.len() <= self.units.len()
            && self.units[self.units.len() - tags.len()..]
                .iter()
                .zip(tags)
                .all(|(u, t)| u.tag == t.as_ref())
    }

    /// True when `self` is a proper prefix of `other`.
    pub fn is_proper_prefix_of(&self, other: &XPath) -> bool {
        self.units.len() < other.units.len() && other.units[..self.units.len()] == self.units[..]
    }
}

impl fmt::Display for XPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for u in &self.units {
            write!(f, "/{u}")?;
        }
        Ok(())
    }
}

fn malformed(input: &str, reason: &str) -> Error {
    Error::MalformedXPath {
        input: input.to_string(),
        reason: reason.to_string(),
    }
}

/// Parses `/tag[k]/tag/...`; an omitted subscript means `[1]`.
pub fn parse_xpath(s: &str) -> Result<XPath> {
    let body = s
        .strip_prefix('/')
        .ok_or_else(|| malformed(s, "must start with '/'"))?;
    let mut units = Vec::new();
    for seg in body.split('/') {
        if seg.is_empty() {
            return Err(malformed(s, "empty segment"));
        }
        let (tag, subscript) = match seg.find('[') {
            Some(open) => {
                let inner = seg[open + 1..]
                    .strip_suffix(']')
                    .ok_or_else(|| malformed(s, "unterminated subscript"))?;
                if inner.is_empty() || !inner.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(malformed(s, "non-numeric subscript"));
                }
                let k: u32 = inner
                    .parse()
                    .map_err(|_| malformed(s, "subscript out of range"))?;
                (&seg[..open], k)
            }
            None => (seg, 1),
        };
        let unit = XPathUnit::new(tag, subscript).map_err(|e| match e {
            Error::MalformedXPath { reason, .. } => malformed(s, &reason),
            other => other,
        })?;
        units.push(unit);
    }
    Ok(XPath { units })
}

impl FromStr for XPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_xpath(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omitted_subscripts_become_explicit() {
        let x = parse_xpath("/html/body/div[2]/a/span").unwrap();
        let units: Vec<_> = x.units().iter().map(|u| (u.tag.as_str(), u.subscript)).collect();
        assert_eq!(
            units,
            [("html", 1), ("body", 1), ("div", 2), ("a", 1), ("span", 1)]
        );
        assert_eq!(x.to_string(), "/html[1]/body[1]/div[2]/a[1]/span[1]");
    }

    #[test]
    fn root_render_is_idempotent() {
        let x = parse_xpath("/html[1]").unwrap();
        assert_eq!(x.len(), 1);
        assert_eq!(x.to_string(), "/html[1]");
        assert_eq!(parse_xpath(&x.to_string()).unwrap(), x);
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "", "html", "/", "//a", "/html//a", "/a[]", "/a[x]", "/a[0]", "/a[-1]", "/a[1", "/[1]",
            "/a b", "/a[1]x", "/a/", "/a[99999999999]",
        ] {
            assert!(
                matches!(parse_xpath(bad), Err(Error::MalformedXPath { .. })),
                "{bad:?} should be rejected"
            );
        }
    }

    #[test]
    fn uppercase_tags_are_lowercased() {
        assert_eq!(parse_xpath("/HTML/Body").unwrap().to_string(), "/html[1]/body[1]");
    }

    #[test]
    fn suffix_and_prefix_helpers() {
        let x = parse_xpath("/html/body/div/a/span").unwrap();
        assert!(x.ends_with_tags(&["a", "span"]));
        assert!(!x.ends_with_tags(&["div", "span"]));
        let p = x.parent().unwrap();
        assert_eq!(p.to_string(), "/html[1]/body[1]/div[1]/a[1]");
        assert!(p.is_proper_prefix_of(&x));
        assert!(!x.is_proper_prefix_of(&x));
    }
}
