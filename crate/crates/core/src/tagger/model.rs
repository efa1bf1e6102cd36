//! The neural node tagger.
//!
//! Per item: the mean word embedding of its token text is concatenated with
//! its XPath embedding and projected to `model_dim`. A stack of multi-head
//! self-attention blocks (residual attention, then a residual `tanh` feed-
//! forward) mixes the items of a chunk, and a linear classifier with softmax
//! gives an 18-way label distribution. There are no positional inputs; the
//! encoder is permutation-equivariant over items.
//!
//! Gradients are computed by hand in [`TaggerModel::loss_and_gradients`].

use std::collections::BTreeMap;

use ndarray::{s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dom::{SequenceItem, SerializationPolicy};
use crate::error::{Error, Result};
use crate::labels::NUM_CLASSES;
use crate::xpath_encoding::{uniform_matrix, MAX_DIM, EncoderCache, EncoderConfig, EncoderParams};

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerConfig {
    pub encoder: EncoderConfig,
    /// Policy the model is trained and applied with.
    pub policy: SerializationPolicy,
    pub word_dim: usize,
    pub model_dim: usize,
    pub heads: usize,
    pub layers: usize,
    pub ffn_dim: usize,
    /// Loss weight of NONE items relative to labeled ones.
    pub none_weight: f64,
    pub max_tokens: usize,
    pub stride: usize,
    /// Words seen fewer times than this in training map to UNK.
    pub word_min_count: usize,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            encoder: EncoderConfig {
                tag_dim: 8,
                sub_dim: 4,
                out_dim: 32,
                ..EncoderConfig::default()
            },
            policy: SerializationPolicy::LeafOnly,
            word_dim: 16,
            model_dim: 32,
            heads: 2,
            layers: 1,
            ffn_dim: 32,
            none_weight: 0.2,
            max_tokens: 512,
            stride: 256,
            word_min_count: 2,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let dims = [self.word_dim, self.model_dim, self.heads, self.ffn_dim];
        if dims.iter().any(|&d| d == 0 || d > MAX_DIM) || self.layers > 64 {
            return bad("tagger dimensions out of range");
        }
        if self.max_tokens > MAX_DIM * 16 {
            return bad("max_tokens out of range");
        }
        if !self.model_dim.is_multiple_of(self.heads) {
            return bad("model_dim must be divisible by heads");
        }
        if !self.none_weight.is_finite() || self.none_weight < 0.0 {
            return bad("none_weight must be finite and >= 0");
        }
        if self.max_tokens == 0 || self.stride == 0 || self.stride > self.max_tokens {
            return Err(Error::InvalidChunkParams {
                max_tokens: self.max_tokens,
                stride: self.stride,
            });
        }
        Ok(())
    }

    /// Closed-form parameter count for a word vocabulary of `vocab_len`.
    pub fn param_count(&self, vocab_len: usize) -> usize {
        let (d, f) = (self.model_dim, self.ffn_dim);
        let input = self.word_dim + self.encoder.out_dim;
        let per_layer = 4 * d * d + d + d * f + f + f * d + d;
        vocab_len * self.word_dim
            + self.encoder.param_count()
            + input * d
            + d
            + self.layers * per_layer
            + d * NUM_CLASSES
            + NUM_CLASSES
    }
}

pub const UNK_WORD: &str = "<unk>";
pub const EMPTY_WORD: &str = "<empty>";

/// Lowercased whitespace-token vocabulary. Index 0 is UNK, index 1 stands in
/// for nodes with no text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordVocab {
    entries: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl WordVocab {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, min_count: usize) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for t in texts {
            for w in t.split_whitespace() {
                *counts.entry(w.to_lowercase()).or_default() += 1;
            }
        }
        let words = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_count && w != UNK_WORD && w != EMPTY_WORD)
            .map(|(w, _)| w);
        let mut entries = vec![UNK_WORD.to_string(), EMPTY_WORD.to_string()];
        entries.extend(words);
        Self::from_entries(entries).expect("built entries are valid")
    }

    pub fn from_entries(entries: Vec<String>) -> Result<Self> {
        if entries.len() < 2 || entries[0] != UNK_WORD || entries[1] != EMPTY_WORD {
            return Err(Error::InvalidConfig("word vocab must start with UNK, EMPTY".into()));
        }
        let mut index = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.is_empty() || e.chars().any(char::is_whitespace) || index.insert(e.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("invalid word vocab entry {e:?}")));
            }
        }
        Ok(WordVocab { entries, index })
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

    /// Word ids of `text`; `[EMPTY]` for text without words.
    pub fn ids(&self, text: &str) -> Vec<usize> {
        let ids: Vec<usize> = text
            .split_whitespace()
            .map(|w| self.index.get(&w.to_lowercase()).copied().unwrap_or(0))
            .collect();
        if ids.is_empty() {
            vec![1]
        } else {
            ids
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub bo: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array2<f64>,
    pub w2: Array2<f64>,
    pub b2: Array2<f64>,
}

impl LayerParams {
    fn init(d: usize, f: usize, rng: &mut impl Rng) -> Self {
        LayerParams {
            wq: uniform_matrix(rng, d, d, d),
            wk: uniform_matrix(rng, d, d, d),
            wv: uniform_matrix(rng, d, d, d),
            wo: uniform_matrix(rng, d, d, d),
            bo: uniform_matrix(rng, 1, d, d),
            w1: uniform_matrix(rng, d, f, d),
            b1: uniform_matrix(rng, 1, f, d),
            w2: uniform_matrix(rng, f, d, f),
            b2: uniform_matrix(rng, 1, d, f),
        }
    }

    fn zeros_like(&self) -> Self {
        let z = |m: &Array2<f64>| Array2::zeros(m.raw_dim());
        LayerParams {
            wq: z(&self.wq),
            wk: z(&self.wk),
            wv: z(&self.wv),
            wo: z(&self.wo),
            bo: z(&self.bo),
            w1: z(&self.w1),
            b1: z(&self.b1),
            w2: z(&self.w2),
            b2: z(&self.b2),
        }
    }

    pub(crate) const NAMES: [&'static str; 9] = ["wq", "wk", "wv", "wo", "bo", "w1", "b1", "w2", "b2"];

    fn tensors(&self) -> [&Array2<f64>; 9] {
        [&self.wq, &self.wk, &self.wv, &self.wo, &self.bo, &self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn tensors_mut(&mut self) -> [&mut Array2<f64>; 9] {
        [
            &mut self.wq,
            &mut self.wk,
            &mut self.wv,
            &mut self.wo,
            &mut self.bo,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ]
    }

    pub(crate) fn shapes(d: usize, f: usize) -> [(usize, usize); 9] {
        [(d, d), (d, d), (d, d), (d, d), (1, d), (d, f), (1, f), (f, d), (1, d)]
    }

    pub(crate) fn from_tensors(mut t: Vec<Array2<f64>>) -> Self {
        debug_assert_eq!(t.len(), 9);
        let mut next = || t.remove(0);
        LayerParams {
            wq: next(),
            wk: next(),
            wv: next(),
            wo: next(),
            bo: next(),
            w1: next(),
            b1: next(),
            w2: next(),
            b2: next(),
        }
    }
}

/// All trainable tensors. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerParams {
    pub word_embeddings: Array2<f64>,
    pub encoder: EncoderParams,
    pub input_weight: Array2<f64>,
    pub input_bias: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub classifier_weight: Array2<f64>,
    pub classifier_bias: Array2<f64>,
}

impl TaggerParams {
    pub fn zeros_like(&self) -> Self {
        TaggerParams {
            word_embeddings: Array2::zeros(self.word_embeddings.raw_dim()),
            encoder: self.encoder.zeros_like(),
            input_weight: Array2::zeros(self.input_weight.raw_dim()),
            input_bias: Array2::zeros(self.input_bias.raw_dim()),
            layers: self.layers.iter().map(LayerParams::zeros_like).collect(),
            classifier_weight: Array2::zeros(self.classifier_weight.raw_dim()),
            classifier_bias: Array2::zeros(self.classifier_bias.raw_dim()),
        }
    }

    /// Named tensors in declaration (and checkpoint) order.
    pub fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out = vec![("word_embeddings".to_string(), &self.word_embeddings)];
        out.extend(self.encoder.tensors().map(|(n, m)| (n.to_string(), m)));
        out.push(("input_weight".into(), &self.input_weight));
        out.push(("input_bias".into(), &self.input_bias));
        for (l, layer) in self.layers.iter().enumerate() {
            for (name, m) in LayerParams::NAMES.iter().zip(layer.tensors()) {
                out.push((format!("layer{l}.{name}"), m));
            }
        }
        out.push(("classifier_weight".into(), &self.classifier_weight));
        out.push(("classifier_bias".into(), &self.classifier_bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let mut out = vec![("word_embeddings".to_string(), &mut self.word_embeddings)];
        out.extend(self.encoder.tensors_mut().map(|(n, m)| (n.to_string(), m)));
        out.push(("input_weight".into(), &mut self.input_weight));
        out.push(("input_bias".into(), &mut self.input_bias));
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for (name, m) in LayerParams::NAMES.iter().zip(layer.tensors_mut()) {
                out.push((format!("layer{l}.{name}"), m));
            }
        }
        out.push(("classifier_weight".into(), &mut self.classifier_weight));
        out.push(("classifier_bias".into(), &mut self.classifier_bias));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub config: TaggerConfig,
    pub vocab: WordVocab,
    pub params: TaggerParams,
}

/// Values saved by the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    word_ids: Vec<Vec<usize>>,
    encoder: EncoderCache,
    input: Array2<f64>,
    layers: Vec<LayerCache>,
    hidden: Array2<f64>,
    /// `n × 18` label distributions.
    pub probs: Array2<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    mixed: Array2<f64>,
    h1: Array2<f64>,
    t: Array2<f64>,
}

pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|x| x / sum);
    }
    out
}

/// Builds a fresh model. Every tensor is drawn from one ChaCha stream seeded
/// with `seed`, uniform in `±1/sqrt(fan_in)`.
pub fn init_model(config: TaggerConfig, vocab: WordVocab, seed: u64) -> Result<TaggerModel> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, f) = (config.model_dim, config.ffn_dim);
    let word_embeddings = uniform_matrix(&mut rng, vocab.len(), config.word_dim, config.word_dim);
    let encoder = EncoderParams::init_with(config.encoder.clone(), &mut rng)?;
    let input_dim = config.word_dim + config.encoder.out_dim;
    let input_weight = uniform_matrix(&mut rng, input_dim, d, input_dim);
    let input_bias = uniform_matrix(&mut rng, 1, d, input_dim);
    let layers = (0..config.layers).map(|_| LayerParams::init(d, f, &mut rng)).collect();
    let classifier_weight = uniform_matrix(&mut rng, d, NUM_CLASSES, d);
    let classifier_bias = uniform_matrix(&mut rng, 1, NUM_CLASSES, d);
    Ok(TaggerModel {
        config,
        vocab,
        params: TaggerParams {
            word_embeddings,
            encoder,
            input_weight,
            input_bias,
            layers,
            classifier_weight,
            classifier_bias,
        },
    })
}

impl TaggerModel {
    pub fn check_shapes(&self) -> Result<()> {
        let c = &self.config;
        let p = &self.params;
        if p.encoder.config != c.encoder {
            return Err(Error::ShapeMismatch("encoder config differs from tagger config".into()));
        }
        p.encoder.check_shapes()?;
        let (d, f) = (c.model_dim, c.ffn_dim);
        let mut expect = vec![
            ("word_embeddings".to_string(), p.word_embeddings.dim(), (self.vocab.len(), c.word_dim)),
            ("input_weight".into(), p.input_weight.dim(), (c.word_dim + c.encoder.out_dim, d)),
            ("input_bias".into(), p.input_bias.dim(), (1, d)),
            ("classifier_weight".into(), p.classifier_weight.dim(), (d, NUM_CLASSES)),
            ("classifier_bias".into(), p.classifier_bias.dim(), (1, NUM_CLASSES)),
        ];
        if p.layers.len() != c.layers {
            return Err(Error::ShapeMismatch(format!(
                "{} layers, config says {}",
                p.layers.len(),
                c.layers
            )));
        }
        for (l, layer) in p.layers.iter().enumerate() {
            for ((name, m), want) in LayerParams::NAMES
                .iter()
                .zip(layer.tensors())
                .zip(LayerParams::shapes(d, f))
            {
                expect.push((format!("layer{l}.{name}"), m.dim(), want));
            }
        }
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::ShapeMismatch(format!("{name}: {got:?} != {want:?}")));
            }
        }
        Ok(())
    }

    /// Label distributions (`n × 18`) for the items of a chunk.
    pub fn forward(&self, items: &[SequenceItem]) -> Result<Array2<f64>> {
        Ok(self.forward_cached(items)?.probs)
    }

    pub fn forward_cached(&self, items: &[SequenceItem]) -> Result<ForwardCache> {
        self.check_shapes()?;
        let c = &self.config;
        let p = &self.params;
        let n = items.len();
        let word_ids: Vec<Vec<usize>> = items.iter().map(|it| self.vocab.ids(&it.token_text)).collect();
        let xpaths: Vec<_> = items.iter().map(|it| &it.xpath).collect();
        let encoder = p.encoder.forward_batch(&xpaths);

        let mut input = Array2::zeros((n, c.word_dim + c.encoder.out_dim));
        for (i, ids) in word_ids.iter().enumerate() {
            let mut row = input.row_mut(i);
            let mut words = row.slice_mut(s![..c.word_dim]);
            for &w in ids {
                words += &p.word_embeddings.row(w);
            }
            words /= ids.len() as f64;
            row.slice_mut(s![c.word_dim..]).assign(&encoder.output().row(i));
        }

        let mut h = input.dot(&p.input_weight) + &p.input_bias;
        let mut layers = Vec::with_capacity(p.layers.len());
        for lp in &p.layers {
            let (next, cache) = self.layer_forward(lp, h);
            layers.push(cache);
            h = next;
        }
        let logits = h.dot(&p.classifier_weight) + &p.classifier_bias;
        let probs = softmax_rows(&logits);
        Ok(ForwardCache {
            word_ids,
            encoder,
            input,
            layers,
            hidden: h,
            probs,
        })
    }

    fn layer_forward(&self, lp: &LayerParams, h: Array2<f64>) -> (Array2<f64>, LayerCache) {
        let heads = self.config.heads;
        let dh = self.config.model_dim / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let q = h.dot(&lp.wq);
        let k = h.dot(&lp.wk);
        let v = h.dot(&lp.wv);
        let mut mixed = Array2::zeros(h.raw_dim());
        let mut attn = Vec::with_capacity(heads);
        for hd in 0..heads {
            let cols = s![.., hd * dh..(hd + 1) * dh];
            let scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            let a = softmax_rows(&scores);
            mixed.slice_mut(cols).assign(&a.dot(&v.slice(cols)));
            attn.push(a);
        }
        let h1 = &h + &(mixed.dot(&lp.wo) + &lp.bo);
        let t = (h1.dot(&lp.w1) + &lp.b1).mapv(f64::tanh);
        let out = &h1 + &(t.dot(&lp.w2) + &lp.b2);
        (
            out,
            LayerCache {
                input: h,
                q,
                k,
                v,
                attn,
                mixed,
                h1,
                t,
            },
        )
    }

    /// Per-item loss weights: `none_weight` for NONE items, 1 otherwise.
    fn item_weights(&self, labels: &[usize]) -> Vec<f64> {
        let none = crate::labels::AttributeLabel::None.index();
        labels
            .iter()
            .map(|&y| if y == none { self.config.none_weight } else { 1.0 })
            .collect()
    }

    /// Weighted mean cross-entropy of `labels` (class indices) and its
    /// gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, items: &[SequenceItem], labels: &[usize]) -> Result<(f64, TaggerParams)> {
        if items.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} items but {} labels",
                items.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= NUM_CLASSES) {
            return Err(Error::ShapeMismatch(format!("label index {bad} out of range")));
        }
        let cache = self.forward_cached(items)?;
        let weights = self.item_weights(labels);
        let total: f64 = weights.iter().sum();
        let mut grads = self.params.zeros_like();
        if total == 0.0 {
            return Ok((0.0, grads));
        }
        let mut loss = 0.0;
        let mut d_logits = cache.probs.clone();
        for (i, &y) in labels.iter().enumerate() {
            loss -= weights[i] * cache.probs[[i, y]].ln();
            d_logits[[i, y]] -= 1.0;
            let mut row = d_logits.row_mut(i);
            row *= weights[i] / total;
        }
        loss /= total;
        self.backward(&cache, &d_logits, &mut grads);
        Ok((loss, grads))
    }

    fn backward(&self, cache: &ForwardCache, d_logits: &Array2<f64>, g: &mut TaggerParams) {
        let p = &self.params;
        let c = &self.config;
        g.classifier_weight += &cache.hidden.t().dot(d_logits);
        g.classifier_bias += &sum_rows(d_logits);
        let mut dh = d_logits.dot(&p.classifier_weight.t());

        for (l, lc) in cache.layers.iter().enumerate().rev() {
            dh = self.layer_backward(&p.layers[l], lc, dh, &mut g.layers[l]);
        }

        g.input_weight += &cache.input.t().dot(&dh);
        g.input_bias += &sum_rows(&dh);
        let dx = dh.dot(&p.input_weight.t());
        for (i, ids) in cache.word_ids.iter().enumerate() {
            let de = dx.slice(s![i, ..c.word_dim]);
            let share = 1.0 / ids.len() as f64;
            for &w in ids {
                let mut row = g.word_embeddings.row_mut(w);
                row.scaled_add(share, &de);
            }
        }
        let d_enc = dx.slice(s![.., c.word_dim..]).to_owned();
        p.encoder.backward(&cache.encoder, &d_enc, &mut g.encoder);
    }

    fn layer_backward(&self, lp: &LayerParams, lc: &LayerCache, dh2: Array2<f64>, g: &mut LayerParams) -> Array2<f64> {
        let heads = self.config.heads;
        let dh = self.config.model_dim / heads;
        let scale = 1.0 / (dh as f64).sqrt();

        // out = h1 + tanh(h1 w1 + b1) w2 + b2
        g.w2 += &lc.t.t().dot(&dh2);
        g.b2 += &sum_rows(&dh2);
        let dt = dh2.dot(&lp.w2.t());
        let dm = dt * &lc.t.mapv(|t| 1.0 - t * t);
        g.w1 += &lc.h1.t().dot(&dm);
        g.b1 += &sum_rows(&dm);
        let dh1 = dh2 + dm.dot(&lp.w1.t());

        // h1 = h + mixed wo + bo
        g.wo += &lc.mixed.t().dot(&dh1);
        g.bo += &sum_rows(&dh1);
        let d_mixed = dh1.dot(&lp.wo.t());
        let mut dq = Array2::zeros(lc.q.raw_dim());
        let mut dk = Array2::zeros(lc.k.raw_dim());
        let mut dv = Array2::zeros(lc.v.raw_dim());
        for (hd, a) in lc.attn.iter().enumerate() {
            let cols = s![.., hd * dh..(hd + 1) * dh];
            let d_out = d_mixed.slice(cols);
            let da = d_out.dot(&lc.v.slice(cols).t());
            dv.slice_mut(cols).assign(&a.t().dot(&d_out));
            let row_dot = (&da * a).sum_axis(Axis(1)).insert_axis(Axis(1));
            let ds = a * &(da - &row_dot) * scale;
            dq.slice_mut(cols).assign(&ds.dot(&lc.k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&lc.q.slice(cols)));
        }
        g.wq += &lc.input.t().dot(&dq);
        g.wk += &lc.input.t().dot(&dk);
        g.wv += &lc.input.t().dot(&dv);
        dh1 + dq.dot(&lp.wq.t()) + dk.dot(&lp.wk.t()) + dv.dot(&lp.wv.t())
    }

    /// One plain gradient-descent step on a chunk. Returns the loss before
    /// the update.
    pub fn train_step(&mut self, items: &[SequenceItem], labels: &[usize], lr: f64) -> Result<f64> {
        if !lr.is_finite() || lr < 0.0 {
            return Err(Error::InvalidConfig(format!("learning rate {lr} must be >= 0")));
        }
        let (loss, grads) = self.loss_and_gradients(items, labels)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(loss));
        }
        if lr > 0.0 {
            for ((_, p), (_, g)) in self.params.tensors_mut().into_iter().zip(grads.tensors()) {
                p.scaled_add(-lr, g);
            }
        }
        Ok(loss)
    }
}

fn sum_rows(m: &Array2<f64>) -> Array2<f64> {
    m.sum_axis(Axis(0)).insert_axis(Axis(0))
}
