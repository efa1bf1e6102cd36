//! Line-delimited record files and the flat text matrix format used by
//! checkpoints.
//!
//! All record files are UTF-8, one record per LF-terminated line, fields
//! separated by a single TAB. Blank lines are skipped.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::dom::{parse_xpath, XPath};
use crate::error::{Error, Result};
use crate::labels::AttributeLabel;
use crate::tagger::Prediction;

/// A `page_id TAB xpath TAB label [TAB score]` line.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub page_id: String,
    pub xpath: XPath,
    pub label: AttributeLabel,
    pub score: Option<f64>,
}

fn record_err(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

fn fields(line: &str) -> Vec<&str> {
    line.strip_suffix('\r').unwrap_or(line).split('\t').collect()
}

fn parse_page_id(s: &str, line: usize) -> Result<String> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(record_err(line, format!("invalid page id {s:?}")));
    }
    Ok(s.to_string())
}

fn parse_label_field(s: &str, line: usize) -> Result<AttributeLabel> {
    let label: AttributeLabel = s.parse().map_err(|_| record_err(line, format!("unknown label {s:?}")))?;
    if label.is_none() {
        return Err(record_err(line, "NONE is not a valid record label"));
    }
    Ok(label)
}

fn parse_score(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| record_err(line, format!("invalid score {s:?}")))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(record_err(line, format!("score {v} outside [0,1]")));
    }
    Ok(v)
}

/// Parses gold or prediction records.
pub fn parse_label_records(text: &str) -> Result<Vec<LabelRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f = fields(raw);
        if f.len() != 3 && f.len() != 4 {
            return Err(record_err(line, format!("expected 3 or 4 fields, got {}", f.len())));
        }
        out.push(LabelRecord {
            page_id: parse_page_id(f[0], line)?,
            xpath: parse_xpath(f[1])?,
            label: parse_label_field(f[2], line)?,
            score: f.get(3).map(|s| parse_score(s, line)).transpose()?,
        });
    }
    Ok(out)
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>> {
    parse_label_records(text)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let score = r
                .score
                .ok_or_else(|| record_err(i + 1, "prediction record is missing its score"))?;
            Ok(Prediction {
                page_id: r.page_id,
                xpath: r.xpath,
                label: r.label,
                score,
            })
        })
        .collect()
}

pub fn write_predictions(preds: &[Prediction]) -> String {
    let mut s = String::new();
    for p in preds {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", p.page_id, p.xpath, p.label, p.score);
    }
    s
}

pub fn write_gold(records: &[(String, XPath, AttributeLabel)]) -> String {
    let mut s = String::new();
    for (page, xpath, label) in records {
        let _ = writeln!(s, "{page}\t{xpath}\t{label}");
    }
    s
}

/// Parses `page_id TAB xpath TAB group_id` lines.
pub fn parse_gold_groups(text: &str) -> Result<Vec<(String, XPath, i64)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f = fields(raw);
        if f.len() != 3 {
            return Err(record_err(line, format!("expected 3 fields, got {}", f.len())));
        }
        let gid: i64 = f[2]
            .parse()
            .map_err(|_| record_err(line, format!("invalid group id {:?}", f[2])))?;
        out.push((parse_page_id(f[0], line)?, parse_xpath(f[1])?, gid));
    }
    Ok(out)
}

pub fn write_gold_groups(records: &[(String, XPath, i64)]) -> String {
    let mut s = String::new();
    for (page, xpath, gid) in records {
        let _ = writeln!(s, "{page}\t{xpath}\t{gid}");
    }
    s
}

/// One `page_id TAB group_id TAB xpath TAB label TAB score` line.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRecord {
    pub page_id: String,
    pub group_id: i64,
    pub prediction: Prediction,
}

pub fn parse_group_records(text: &str) -> Result<Vec<GroupRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f = fields(raw);
        if f.len() != 5 {
            return Err(record_err(line, format!("expected 5 fields, got {}", f.len())));
        }
        let page_id = parse_page_id(f[0], line)?;
        let group_id: i64 = f[1]
            .parse()
            .map_err(|_| record_err(line, format!("invalid group id {:?}", f[1])))?;
        out.push(GroupRecord {
            prediction: Prediction {
                page_id: page_id.clone(),
                xpath: parse_xpath(f[2])?,
                label: parse_label_field(f[3], line)?,
                score: parse_score(f[4], line)?,
            },
            page_id,
            group_id,
        });
    }
    Ok(out)
}

pub fn write_group_records(records: &[GroupRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let p = &r.prediction;
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", r.page_id, r.group_id, p.xpath, p.label, p.score);
    }
    s
}

/// Writer for the versioned flat text format: a magic line, `key value`
/// header lines, word lists, then row-major matrices.
#[derive(Default)]
pub struct TextWriter {
    buf: String,
}

impl TextWriter {
    pub fn new(magic: &str, version: u32) -> Self {
        let mut w = TextWriter::default();
        let _ = writeln!(w.buf, "{magic} {version}");
        w
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.buf, "{key} {value}");
    }

    pub fn list(&mut self, key: &str, items: &[String]) {
        let _ = writeln!(self.buf, "{key} {}", items.len());
        for it in items {
            let _ = writeln!(self.buf, "{it}");
        }
    }

    pub fn matrix(&mut self, name: &str, m: &Array2<f64>) {
        let _ = writeln!(self.buf, "matrix {name} {} {}", m.nrows(), m.ncols());
        for row in m.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    self.buf.push(' ');
                }
                first = false;
                // Display for f64 is shortest round-trip
                let _ = write!(self.buf, "{v}");
            }
            self.buf.push('\n');
        }
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("end\n");
        self.buf
    }
}

/// Reader matching [`TextWriter`]; every accessor expects the next line.
pub struct TextReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

fn ckpt_err(msg: impl Into<String>) -> Error {
    Error::MalformedCheckpoint(msg.into())
}

impl<'a> TextReader<'a> {
    pub fn new(text: &'a str, magic: &str, version: u32) -> Result<Self> {
        let mut r = TextReader {
            lines: text.lines().enumerate(),
        };
        let header = r.next_line()?;
        let expected = format!("{magic} {version}");
        if header != expected {
            return Err(ckpt_err(format!("expected header {expected:?}, found {header:?}")));
        }
        Ok(r)
    }

    fn next_line(&mut self) -> Result<&'a str> {
        self.lines
            .next()
            .map(|(_, l)| l)
            .ok_or_else(|| ckpt_err("unexpected end of file"))
    }

    pub fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.next_line()?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| ckpt_err(format!("expected field {key:?}, found {line:?}")))?;
        value
            .parse()
            .map_err(|_| ckpt_err(format!("invalid value for {key}: {value:?}")))
    }

    pub fn list(&mut self, key: &str) -> Result<Vec<String>> {
        let n: usize = self.field(key)?;
        let mut out = Vec::new();
        for _ in 0..n {
            out.push(self.next_line()?.to_string());
        }
        Ok(out)
    }

    pub fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let line = self.next_line()?;
        let expected = format!("matrix {name} {rows} {cols}");
        if line != expected {
            return Err(ckpt_err(format!("expected {expected:?}, found {line:?}")));
        }
        let mut data = Vec::with_capacity(rows.saturating_mul(cols).min(1 << 12));
        for r in 0..rows {
            let row = self.next_line()?;
            let before = data.len();
            for tok in row.split(' ').filter(|t| !t.is_empty()) {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| ckpt_err(format!("{name} row {r}: invalid number {tok:?}")))?;
                if !v.is_finite() {
                    return Err(ckpt_err(format!("{name} row {r}: non-finite entry")));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(ckpt_err(format!("{name} row {r}: expected {cols} values")));
            }
        }
        Array2::from_shape_vec((rows, cols), data).map_err(|e| ckpt_err(e.to_string()))
    }

    pub fn finish(mut self) -> Result<()> {
        match self.next_line()? {
            "end" => Ok(()),
            other => Err(ckpt_err(format!("expected end marker, found {other:?}"))),
        }
    }
}
