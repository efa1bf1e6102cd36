//! Model checkpoint: `wie-tagger 1`, config fields, the word and tag
//! vocabularies, then every tensor row-major in declaration order, then
//! `end`. Numbers are written in shortest round-trip form, so equal models
//! produce identical bytes.

use crate::dom::SerializationPolicy;
use crate::error::{Error, Result};
use crate::formats::{TextReader, TextWriter};
use crate::xpath_encoding::EncoderParams;

use super::model::{LayerParams, TaggerConfig, TaggerModel, TaggerParams, WordVocab};
use crate::labels::NUM_CLASSES;

const MAGIC: &str = "wie-tagger";
const VERSION: u32 = 1;

fn bad(e: Error) -> Error {
    match e {
        Error::MalformedCheckpoint(_) => e,
        other => Error::MalformedCheckpoint(other.to_string()),
    }
}

impl TaggerModel {
    pub fn to_checkpoint(&self) -> String {
        let c = &self.config;
        let mut w = TextWriter::new(MAGIC, VERSION);
        w.field("policy", c.policy);
        w.field("word_dim", c.word_dim);
        w.field("model_dim", c.model_dim);
        w.field("heads", c.heads);
        w.field("layers", c.layers);
        w.field("ffn_dim", c.ffn_dim);
        w.field("none_weight", c.none_weight);
        w.field("max_tokens", c.max_tokens);
        w.field("stride", c.stride);
        w.field("word_min_count", c.word_min_count);
        EncoderParams::write_config(&c.encoder, &mut w);
        w.list("words", self.vocab.entries());
        for (name, m) in self.params.tensors() {
            w.matrix(&name, m);
        }
        w.finish()
    }

    pub fn from_checkpoint(text: &str) -> Result<TaggerModel> {
        let mut r = TextReader::new(text, MAGIC, VERSION)?;
        let policy: String = r.field("policy")?;
        let policy: SerializationPolicy = policy.parse().map_err(bad)?;
        let word_dim = r.field("word_dim")?;
        let model_dim = r.field("model_dim")?;
        let heads = r.field("heads")?;
        let layers = r.field("layers")?;
        let ffn_dim = r.field("ffn_dim")?;
        let none_weight = r.field("none_weight")?;
        let max_tokens = r.field("max_tokens")?;
        let stride = r.field("stride")?;
        let word_min_count = r.field("word_min_count")?;
        let encoder = EncoderParams::read_config(&mut r)?;
        let config = TaggerConfig {
            encoder,
            policy,
            word_dim,
            model_dim,
            heads,
            layers,
            ffn_dim,
            none_weight,
            max_tokens,
            stride,
            word_min_count,
        };
        config.validate().map_err(bad)?;
        let vocab = WordVocab::from_entries(r.list("words")?).map_err(bad)?;

        let (d, f) = (model_dim, ffn_dim);
        let word_embeddings = r.matrix("word_embeddings", vocab.len(), word_dim)?;
        let encoder = EncoderParams::read_matrices(&mut r, config.encoder.clone())?;
        let input_dim = word_dim + config.encoder.out_dim;
        let input_weight = r.matrix("input_weight", input_dim, d)?;
        let input_bias = r.matrix("input_bias", 1, d)?;
        let mut layer_params = Vec::with_capacity(layers);
        for l in 0..layers {
            let mut tensors = Vec::with_capacity(9);
            for (name, (rows, cols)) in LayerParams::NAMES.iter().zip(LayerParams::shapes(d, f)) {
                tensors.push(r.matrix(&format!("layer{l}.{name}"), rows, cols)?);
            }
            layer_params.push(LayerParams::from_tensors(tensors));
        }
        let classifier_weight = r.matrix("classifier_weight", d, NUM_CLASSES)?;
        let classifier_bias = r.matrix("classifier_bias", 1, NUM_CLASSES)?;
        r.finish()?;
        let model = TaggerModel {
            config,
            vocab,
            params: TaggerParams {
                word_embeddings,
                encoder,
                input_weight,
                input_bias,
                layers: layer_params,
                classifier_weight,
                classifier_bias,
            },
        };
        model.check_shapes().map_err(bad)?;
        Ok(model)
    }
}
