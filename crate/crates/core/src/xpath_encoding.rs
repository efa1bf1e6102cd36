//! Fixed-size XPath embeddings.
//!
//! Each unit of an XPath is embedded as `[tag_embedding ; subscript_embedding]`.
//! The path is truncated to its deepest `max_depth` units (or front-padded
//! with PAD units), the unit vectors are concatenated, and an affine map
//! followed by `tanh` produces the `out_dim` vector.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dom::{XPath, XPathUnit};
use crate::error::{Error, Result};
use crate::formats::{TextReader, TextWriter};

/// Upper bound on any single configured dimension.
pub const MAX_DIM: usize = 1 << 16;

pub const PAD_TAG: &str = "<pad>";
pub const UNK_TAG: &str = "<unk>";

/// Tags known to the default vocabulary.
pub const DEFAULT_TAGS: &[&str] = &[
    "html", "head", "title", "meta", "link", "body", "header", "nav", "main", "footer", "aside",
    "article", "section", "div", "span", "p", "a", "ul", "ol", "li", "dl", "dt", "dd", "h1", "h2",
    "h3", "h4", "h5", "h6", "b", "i", "em", "strong", "small", "cite", "blockquote", "figure",
    "figcaption", "img", "br", "hr", "table", "thead", "tbody", "tr", "td", "th", "form", "input",
    "button", "label", "select", "option", "time", "sup", "sub", "picture", "source", "svg",
];

/// Tag vocabulary. Index 0 is PAD and index 1 is UNK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagVocab {
    entries: Vec<String>,
}

impl TagVocab {
    pub fn new<S: AsRef<str>>(tags: &[S]) -> Self {
        let mut entries = vec![PAD_TAG.to_string(), UNK_TAG.to_string()];
        for t in tags {
            let t = t.as_ref();
            if !entries.iter().any(|e| e == t) {
                entries.push(t.to_string());
            }
        }
        TagVocab { entries }
    }

    /// Rebuilds from a saved entry list, which must start with PAD, UNK and
    /// contain no duplicates.
    pub fn from_entries(entries: Vec<String>) -> Result<Self> {
        if entries.len() < 2 || entries[0] != PAD_TAG || entries[1] != UNK_TAG {
            return Err(Error::InvalidConfig("tag vocab must start with PAD, UNK".into()));
        }
        let mut sorted = entries.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != entries.len() {
            return Err(Error::InvalidConfig("duplicate tag vocab entry".into()));
        }
        Ok(TagVocab { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn pad(&self) -> usize {
        0
    }

    pub fn unk(&self) -> usize {
        1
    }

    pub fn index(&self, tag: &str) -> usize {
        self.entries[2..]
            .iter()
            .position(|e| e == tag)
            .map_or(self.unk(), |p| p + 2)
    }
}

impl Default for TagVocab {
    fn default() -> Self {
        TagVocab::new(DEFAULT_TAGS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderConfig {
    pub max_depth: usize,
    pub tag_dim: usize,
    pub sub_dim: usize,
    pub out_dim: usize,
    pub max_subscript: usize,
    pub tag_vocab: TagVocab,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            max_depth: 16,
            tag_dim: 16,
            sub_dim: 8,
            out_dim: 64,
            max_subscript: 64,
            tag_vocab: TagVocab::default(),
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.max_depth, self.tag_dim, self.sub_dim, self.out_dim, self.max_subscript];
        if dims.iter().any(|&d| d == 0 || d > MAX_DIM) {
            return Err(Error::InvalidConfig(format!(
                "encoder dimensions must be in 1..={MAX_DIM}"
            )));
        }
        Ok(())
    }

    pub fn unit_dim(&self) -> usize {
        self.tag_dim + self.sub_dim
    }

    pub fn input_dim(&self) -> usize {
        self.max_depth * self.unit_dim()
    }

    /// Row of the subscript table for subscripts above `max_subscript`.
    pub fn overflow_row(&self) -> usize {
        self.max_subscript
    }

    pub fn pad_sub_row(&self) -> usize {
        self.max_subscript + 1
    }

    pub fn param_count(&self) -> usize {
        self.tag_vocab.len() * self.tag_dim
            + (self.max_subscript + 2) * self.sub_dim
            + self.input_dim() * self.out_dim
            + self.out_dim
    }
}

/// Uniform entries in `±1/sqrt(fan_in)`.
pub(crate) fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize, fan_in: usize) -> Array2<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || (rng.random::<f64>() * 2.0 - 1.0) * bound)
}

/// Learned parameters. `weight` maps the concatenated unit vectors
/// (`max_depth * (tag_dim + sub_dim)`) to `out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub tag_embeddings: Array2<f64>,
    pub sub_embeddings: Array2<f64>,
    pub weight: Array2<f64>,
    pub bias: Array2<f64>,
}

/// Forward values kept for the backward pass over a batch of XPaths.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    indices: Vec<Vec<(usize, usize)>>,
    input: Array2<f64>,
    output: Array2<f64>,
}

impl EncoderCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

pub fn init_encoder(config: EncoderConfig, seed: u64) -> Result<EncoderParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EncoderParams::init_with(config, &mut rng)
}

impl EncoderParams {
    /// Embedding tables use `fan_in = embedding dim`; the affine map uses
    /// `fan_in = input_dim` for both weight and bias.
    pub fn init_with(config: EncoderConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let tag_embeddings = uniform_matrix(rng, config.tag_vocab.len(), config.tag_dim, config.tag_dim);
        let sub_embeddings = uniform_matrix(rng, config.max_subscript + 2, config.sub_dim, config.sub_dim);
        let weight = uniform_matrix(rng, config.input_dim(), config.out_dim, config.input_dim());
        let bias = uniform_matrix(rng, 1, config.out_dim, config.input_dim());
        Ok(EncoderParams {
            config,
            tag_embeddings,
            sub_embeddings,
            weight,
            bias,
        })
    }

    pub fn zeros_like(&self) -> Self {
        EncoderParams {
            config: self.config.clone(),
            tag_embeddings: Array2::zeros(self.tag_embeddings.raw_dim()),
            sub_embeddings: Array2::zeros(self.sub_embeddings.raw_dim()),
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array2::zeros(self.bias.raw_dim()),
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        let c = &self.config;
        let expect = [
            ("tag_embeddings", self.tag_embeddings.dim(), (c.tag_vocab.len(), c.tag_dim)),
            ("sub_embeddings", self.sub_embeddings.dim(), (c.max_subscript + 2, c.sub_dim)),
            ("xpath weight", self.weight.dim(), (c.input_dim(), c.out_dim)),
            ("xpath bias", self.bias.dim(), (1, c.out_dim)),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::ShapeMismatch(format!("{name}: {got:?} != {want:?}")));
            }
        }
        Ok(())
    }

    pub fn tensors(&self) -> [(&'static str, &Array2<f64>); 4] {
        [
            ("xpath.tag_embeddings", &self.tag_embeddings),
            ("xpath.sub_embeddings", &self.sub_embeddings),
            ("xpath.weight", &self.weight),
            ("xpath.bias", &self.bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Array2<f64>); 4] {
        [
            ("xpath.tag_embeddings", &mut self.tag_embeddings),
            ("xpath.sub_embeddings", &mut self.sub_embeddings),
            ("xpath.weight", &mut self.weight),
            ("xpath.bias", &mut self.bias),
        ]
    }

    fn tag_row(&self, tag: &str) -> usize {
        self.config.tag_vocab.index(tag)
    }

    fn sub_row(&self, subscript: u32) -> usize {
        let s = subscript as usize;
        if s >= 1 && s <= self.config.max_subscript {
            s - 1
        } else {
            self.config.overflow_row()
        }
    }

    /// `(tag row, subscript row)` for each of the `max_depth` positions.
    pub fn unit_indices(&self, xpath: &XPath) -> Vec<(usize, usize)> {
        let d = self.config.max_depth;
        let units = xpath.units();
        let kept = &units[units.len().saturating_sub(d)..];
        let pad = (self.config.tag_vocab.pad(), self.config.pad_sub_row());
        let mut out = vec![pad; d - kept.len()];
        out.extend(kept.iter().map(|u| (self.tag_row(&u.tag), self.sub_row(u.subscript))));
        out
    }

    pub fn encode_unit(&self, unit: &XPathUnit) -> Array1<f64> {
        self.unit_vector(self.tag_row(&unit.tag), self.sub_row(unit.subscript))
    }

    fn unit_vector(&self, tag_row: usize, sub_row: usize) -> Array1<f64> {
        let mut v = Array1::zeros(self.config.unit_dim());
        v.slice_mut(s![..self.config.tag_dim])
            .assign(&self.tag_embeddings.row(tag_row));
        v.slice_mut(s![self.config.tag_dim..])
            .assign(&self.sub_embeddings.row(sub_row));
        v
    }

    fn input_vector(&self, indices: &[(usize, usize)]) -> Array1<f64> {
        let ud = self.config.unit_dim();
        let mut z = Array1::zeros(self.config.input_dim());
        for (p, &(t, s)) in indices.iter().enumerate() {
            z.slice_mut(s![p * ud..(p + 1) * ud])
                .assign(&self.unit_vector(t, s));
        }
        z
    }

    pub fn encode_xpath(&self, xpath: &XPath) -> Array1<f64> {
        let z = self.input_vector(&self.unit_indices(xpath));
        (z.dot(&self.weight) + self.bias.row(0)).mapv(f64::tanh)
    }

    /// Encodes many XPaths at once, keeping what the backward pass needs.
    pub fn forward_batch(&self, xpaths: &[&XPath]) -> EncoderCache {
        let indices: Vec<_> = xpaths.iter().map(|x| self.unit_indices(x)).collect();
        let mut input = Array2::zeros((xpaths.len(), self.config.input_dim()));
        for (i, idx) in indices.iter().enumerate() {
            input.row_mut(i).assign(&self.input_vector(idx));
        }
        let output = (input.dot(&self.weight) + &self.bias).mapv(f64::tanh);
        EncoderCache {
            indices,
            input,
            output,
        }
    }

    /// Accumulates parameter gradients into `grads` given `d_output`, the
    /// loss gradient w.r.t. the batch output.
    pub fn backward(&self, cache: &EncoderCache, d_output: &Array2<f64>, grads: &mut EncoderParams) {
        let d_pre = d_output * &cache.output.mapv(|g| 1.0 - g * g);
        grads.weight += &cache.input.t().dot(&d_pre);
        grads.bias += &d_pre.sum_axis(Axis(0)).insert_axis(Axis(0));
        let d_input = d_pre.dot(&self.weight.t());
        let (td, ud) = (self.config.tag_dim, self.config.unit_dim());
        for (i, idx) in cache.indices.iter().enumerate() {
            let row = d_input.row(i);
            for (p, &(t, s)) in idx.iter().enumerate() {
                let base = p * ud;
                add_row(&mut grads.tag_embeddings, t, row.slice(s![base..base + td]));
                add_row(&mut grads.sub_embeddings, s, row.slice(s![base + td..base + ud]));
            }
        }
    }

    pub(crate) fn write_config(config: &EncoderConfig, w: &mut TextWriter) {
        w.field("xpath.max_depth", config.max_depth);
        w.field("xpath.tag_dim", config.tag_dim);
        w.field("xpath.sub_dim", config.sub_dim);
        w.field("xpath.out_dim", config.out_dim);
        w.field("xpath.max_subscript", config.max_subscript);
        w.list("xpath.tag_vocab", config.tag_vocab.entries());
    }

    pub(crate) fn write_matrices(&self, w: &mut TextWriter) {
        for (name, m) in self.tensors() {
            w.matrix(name, m);
        }
    }

    pub(crate) fn read_config(r: &mut TextReader<'_>) -> Result<EncoderConfig> {
        let config = EncoderConfig {
            max_depth: r.field("xpath.max_depth")?,
            tag_dim: r.field("xpath.tag_dim")?,
            sub_dim: r.field("xpath.sub_dim")?,
            out_dim: r.field("xpath.out_dim")?,
            max_subscript: r.field("xpath.max_subscript")?,
            tag_vocab: TagVocab::from_entries(r.list("xpath.tag_vocab")?)
                .map_err(|e| Error::MalformedCheckpoint(e.to_string()))?,
        };
        config
            .validate()
            .map_err(|e| Error::MalformedCheckpoint(e.to_string()))?;
        Ok(config)
    }

    pub(crate) fn read_matrices(r: &mut TextReader<'_>, config: EncoderConfig) -> Result<Self> {
        let tag_embeddings = r.matrix("xpath.tag_embeddings", config.tag_vocab.len(), config.tag_dim)?;
        let sub_embeddings = r.matrix("xpath.sub_embeddings", config.max_subscript + 2, config.sub_dim)?;
        let weight = r.matrix("xpath.weight", config.input_dim(), config.out_dim)?;
        let bias = r.matrix("xpath.bias", 1, config.out_dim)?;
        Ok(EncoderParams {
            config,
            tag_embeddings,
            sub_embeddings,
            weight,
            bias,
        })
    }

    /// Standalone encoder file: `wie-xpath-encoder 1` header, config, then
    /// the four matrices row-major.
    pub fn to_text(&self) -> String {
        let mut w = TextWriter::new("wie-xpath-encoder", 1);
        Self::write_config(&self.config, &mut w);
        self.write_matrices(&mut w);
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = TextReader::new(text, "wie-xpath-encoder", 1)?;
        let config = Self::read_config(&mut r)?;
        let p = Self::read_matrices(&mut r, config)?;
        r.finish()?;
        Ok(p)
    }
}

fn add_row(m: &mut Array2<f64>, row: usize, v: ArrayView1<'_, f64>) {
    let mut r = m.row_mut(row);
    r += &v;
}
